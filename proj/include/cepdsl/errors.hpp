#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cepdsl/validator.hpp"

namespace cepdsl {

/// A model with validation findings was handed to an operation that requires
/// a valid one (code generation, execution).
class InvalidModel : public std::runtime_error {
public:
    explicit InvalidModel(std::vector<Diagnostic> diagnostics)
        : std::runtime_error("model has " + std::to_string(diagnostics.size()) + " validation finding(s)"),
          diagnostics_(std::move(diagnostics)) {}

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// A valid model uses a construct the requested backend does not cover.
/// `path` addresses the offending model location.
class UnsupportedConstruct : public std::runtime_error {
public:
    UnsupportedConstruct(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)), message_(message) {}

    const std::string& path() const { return path_; }
    const std::string& detail() const { return message_; }

private:
    std::string path_;
    std::string message_;
};

}  // namespace cepdsl
