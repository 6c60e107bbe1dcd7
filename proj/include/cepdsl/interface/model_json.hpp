#pragma once

// `.ceprule.json` model documents.
//
//   {
//     "format_version": "1.0",
//     "rule": { "name", "events", "targets", "pattern"?, "bring",
//               "condition"?, "group_by"?, "output"? },
//     "editor_meta": { ... }?        // opaque, owned by the editor
//   }
//
// Parsing is structural only (validation is separate) and strict: unknown
// keys, unknown enum spellings and wrong value types are errors that carry
// the line, column and path of the offending value.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cepdsl/model.hpp"

namespace cepdsl {

inline constexpr std::string_view kFormatVersion = "1.0";

struct ModelDocument {
    RuleModel rule;
    std::optional<nlohmann::ordered_json> editor_meta;
};

struct ParseError {
    std::size_t line = 0;    // 1-based; 0 when unknown
    std::size_t column = 0;
    std::string path;        // "targets[0].window.kind"; empty for syntax errors
    std::string message;
};

std::string format_parse_error(const ParseError& e);

class ModelParseError : public std::runtime_error {
public:
    explicit ModelParseError(std::vector<ParseError> errors);
    const std::vector<ParseError>& errors() const { return errors_; }

private:
    std::vector<ParseError> errors_;
};

/// Throws ModelParseError.
ModelDocument parse_model(std::string_view text);

/// Same rules for a document already parsed as part of a larger body.
/// `path_prefix` is prepended to error paths ("model." for API requests).
ModelDocument model_from_json(const nlohmann::ordered_json& doc, const std::string& path_prefix = {});

nlohmann::ordered_json model_to_json(const RuleModel& model,
                                     const std::optional<nlohmann::ordered_json>& editor_meta = std::nullopt);

/// Canonical key order, two-space indentation, trailing newline.
std::string serialize_model(const RuleModel& model,
                            const std::optional<nlohmann::ordered_json>& editor_meta = std::nullopt);

}  // namespace cepdsl
