#pragma once

// Newline-delimited event streams and engine output records.
//
//   input  {"type": "Withdrawal", "ts": 5000, "attrs": {"amount": 250.0}}
//   output {"emitted_at": 5000, "event": "Alert", "values": {"amount": 250.0}}
//
// "event" is present only when the rule names an output event. Blank input
// lines are skipped.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cepdsl/engine.hpp"

namespace cepdsl {

class StreamParseError : public std::runtime_error {
public:
    StreamParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Throws std::invalid_argument on a malformed record.
TimedEvent event_from_json(const nlohmann::ordered_json& record);
nlohmann::ordered_json event_to_json(const TimedEvent& event);

/// Throws StreamParseError naming the 1-based line.
std::vector<TimedEvent> parse_stream(std::string_view text);

nlohmann::ordered_json value_to_json(const Value& v);
nlohmann::ordered_json output_to_json(const OutputRow& row);

/// One compact record per line, each followed by a newline.
std::string serialize_outputs(const std::vector<OutputRow>& rows);

}  // namespace cepdsl
