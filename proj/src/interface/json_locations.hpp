#pragma once

// Source positions of the values in a JSON text, keyed by path
// ("rule.targets[0].window.kind"). nlohmann::json keeps no positions, so the
// text is scanned a second time once it is known to parse.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace cepdsl::detail {

struct TextPosition {
    std::size_t line = 1;
    std::size_t column = 1;
};

TextPosition position_at(std::string_view text, std::size_t offset);

/// Best-effort: stops quietly on malformed input.
std::map<std::string, TextPosition> locate_values(std::string_view text);

std::string join_path(const std::string& parent, const std::string& key);
std::string index_path(const std::string& parent, std::size_t index);

}  // namespace cepdsl::detail
