#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace cepdsl {

/// Runtime attribute value. monostate is SQL-style null; timestamps travel as
/// integer milliseconds.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

std::string value_text(const Value& v);

}  // namespace cepdsl
