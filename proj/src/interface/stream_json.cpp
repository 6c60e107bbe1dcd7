#include "cepdsl/interface/stream_json.hpp"

#include <cmath>
#include <sstream>

namespace cepdsl {

using Json = nlohmann::ordered_json;

namespace {

Value value_from_json(const Json& v, const std::string& name) {
    if (v.is_null()) return {};
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    throw std::invalid_argument("attribute '" + name + "' must be a scalar");
}

}  // namespace

TimedEvent event_from_json(const Json& record) {
    if (!record.is_object()) throw std::invalid_argument("record must be an object");
    for (const auto& [key, value] : record.items())
        if (key != "type" && key != "ts" && key != "attrs") throw std::invalid_argument("unknown key '" + key + "'");
    if (!record.contains("type") || !record.at("type").is_string())
        throw std::invalid_argument("'type' must be a string");
    if (!record.contains("ts") || !record.at("ts").is_number_integer())
        throw std::invalid_argument("'ts' must be an integer");
    TimedEvent e;
    e.type_name = record.at("type").get<std::string>();
    e.timestamp = record.at("ts").get<std::int64_t>();
    if (record.contains("attrs")) {
        const auto& attrs = record.at("attrs");
        if (!attrs.is_object()) throw std::invalid_argument("'attrs' must be an object");
        for (const auto& [key, value] : attrs.items()) e.attrs[key] = value_from_json(value, key);
    }
    return e;
}

Json value_to_json(const Value& v) {
    return std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) return std::isfinite(x) ? Json(x) : Json(nullptr);
            else return x;
        },
        v);
}

Json event_to_json(const TimedEvent& event) {
    Json j = Json::object();
    j["type"] = event.type_name;
    j["ts"] = event.timestamp;
    Json attrs = Json::object();
    for (const auto& [k, v] : event.attrs) attrs[k] = value_to_json(v);
    j["attrs"] = std::move(attrs);
    return j;
}

std::vector<TimedEvent> parse_stream(std::string_view text) {
    std::vector<TimedEvent> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(event_from_json(Json::parse(line.begin(), line.end())));
        } catch (const nlohmann::json::parse_error&) {
            throw StreamParseError(line_no, "malformed JSON record");
        } catch (const std::invalid_argument& e) {
            throw StreamParseError(line_no, e.what());
        }
    }
    return out;
}

Json output_to_json(const OutputRow& row) {
    Json j = Json::object();
    j["emitted_at"] = row.emitted_at;
    if (row.derived_event_name) j["event"] = *row.derived_event_name;
    Json values = Json::object();
    for (const auto& [name, value] : row.values) values[name] = value_to_json(value);
    j["values"] = std::move(values);
    return j;
}

std::string serialize_outputs(const std::vector<OutputRow>& rows) {
    std::string out;
    for (const auto& r : rows) out += output_to_json(r).dump() + "\n";
    return out;
}

}  // namespace cepdsl
