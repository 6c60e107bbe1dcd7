#include "cepdsl/interface/model_json.hpp"

#include <array>
#include <cmath>
#include <initializer_list>

#include "json_locations.hpp"

namespace cepdsl {

using Json = nlohmann::ordered_json;

std::string format_parse_error(const ParseError& e) {
    std::string out;
    if (e.line) out += std::to_string(e.line) + ":" + std::to_string(e.column) + ": ";
    if (!e.path.empty()) out += e.path + ": ";
    return out + e.message;
}

ModelParseError::ModelParseError(std::vector<ParseError> errors)
    : std::runtime_error(errors.empty() ? "parse error" : format_parse_error(errors.front())),
      errors_(std::move(errors)) {}

namespace {

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

struct Failure {
    std::string doc_path;  // path inside the document, for locating
    std::string message;
};

template <class E, std::size_t N>
E parse_enum(const std::array<E, N>& all, const std::string& text, const std::string& path, const char* what) {
    for (E e : all)
        if (to_string(e) == text) return e;
    throw Failure{path, "unknown " + std::string(what) + " '" + text + "'"};
}

constexpr std::array kAttrKinds{AttrKind::Integer, AttrKind::Float, AttrKind::String, AttrKind::Boolean,
                                AttrKind::Timestamp};
constexpr std::array kWindowKinds{WindowKind::Timer, WindowKind::Counter, WindowKind::KeepAll};
constexpr std::array kAggFns{AggFn::Avg, AggFn::Sum, AggFn::Max, AggFn::Min, AggFn::Count};
constexpr std::array kScalarFns{ScalarFnName::Max2, ScalarFnName::Min2};
constexpr std::array kCompareOps{CompareOp::Eq, CompareOp::Ne, CompareOp::Lt,
                                 CompareOp::Le, CompareOp::Gt, CompareOp::Ge};
constexpr std::array kLogicalOps{LogicalOp::And, LogicalOp::Or, LogicalOp::Not};
constexpr std::array kArithOps{ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div};
constexpr std::array kGuardKinds{GuardKind::Within, GuardKind::WithinMax};
constexpr std::array kRepetitionKinds{RepetitionKind::Every, RepetitionKind::EveryDistinct, RepetitionKind::Range,
                                      RepetitionKind::While, RepetitionKind::Until};
constexpr std::array kPatternOps{PatternOp::And, PatternOp::Or, PatternOp::Not, PatternOp::FollowedBy};

class Reader {
public:
    ModelDocument document(const Json& doc) {
        expect_object(doc, "");
        only_keys(doc, "", {"format_version", "rule", "editor_meta"});
        const auto& version = member(doc, "", "format_version");
        if (!version.is_string()) throw Failure{"format_version", "expected a string"};
        if (version.get<std::string>() != kFormatVersion)
            throw Failure{"format_version", "unsupported format_version '" + version.get<std::string>() +
                                                "', expected '" + std::string(kFormatVersion) + "'"};
        ModelDocument out;
        out.rule = rule(member(doc, "", "rule"), "rule");
        if (doc.contains("editor_meta")) out.editor_meta = doc.at("editor_meta");
        return out;
    }

private:
    static void expect_object(const Json& j, const std::string& path) {
        if (!j.is_object()) throw Failure{path, "expected an object"};
    }

    static void expect_array(const Json& j, const std::string& path) {
        if (!j.is_array()) throw Failure{path, "expected an array"};
    }

    static void only_keys(const Json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
        for (const auto& [key, value] : j.items()) {
            bool known = false;
            for (auto k : keys) known = known || k == key;
            if (!known) throw Failure{join(path, key), "unknown key '" + key + "'"};
        }
    }

    static std::string join(const std::string& path, const std::string& key) { return detail::join_path(path, key); }
    static std::string at(const std::string& path, std::size_t i) { return detail::index_path(path, i); }

    static const Json& member(const Json& j, const std::string& path, const std::string& key) {
        if (!j.contains(key)) throw Failure{join(path, key), "missing key '" + key + "'"};
        return j.at(key);
    }

    static std::string text(const Json& j, const std::string& path, const std::string& key) {
        const auto& v = member(j, path, key);
        if (!v.is_string()) throw Failure{join(path, key), "expected a string"};
        return v.get<std::string>();
    }

    static std::string optional_text(const Json& j, const std::string& path, const std::string& key) {
        return j.contains(key) ? text(j, path, key) : std::string{};
    }

    static double number(const Json& j, const std::string& path, const std::string& key) {
        const auto& v = member(j, path, key);
        if (!v.is_number()) throw Failure{join(path, key), "expected a number"};
        return v.get<double>();
    }

    static std::int64_t integer(const Json& j, const std::string& path, const std::string& key) {
        const auto& v = member(j, path, key);
        if (!v.is_number_integer()) throw Failure{join(path, key), "expected an integer"};
        return v.get<std::int64_t>();
    }

    RuleModel rule(const Json& j, const std::string& path) {
        expect_object(j, path);
        only_keys(j, path, {"name", "events", "targets", "pattern", "bring", "condition", "group_by", "output"});
        RuleModel m;
        m.name = text(j, path, "name");

        auto events_path = join(path, "events");
        const auto& events = member(j, path, "events");
        expect_array(events, events_path);
        for (std::size_t i = 0; i < events.size(); ++i) m.events.push_back(event_type(events[i], at(events_path, i)));

        auto targets_path = join(path, "targets");
        const auto& targets = member(j, path, "targets");
        expect_array(targets, targets_path);
        for (std::size_t i = 0; i < targets.size(); ++i) m.targets.push_back(target(targets[i], at(targets_path, i)));

        if (j.contains("pattern")) m.pattern = pattern(j.at("pattern"), join(path, "pattern"));

        auto bring_path = join(path, "bring");
        const auto& bring = member(j, path, "bring");
        expect_array(bring, bring_path);
        for (std::size_t i = 0; i < bring.size(); ++i) m.bring.push_back(select_item(bring[i], at(bring_path, i)));

        if (j.contains("condition")) m.condition = expression(j.at("condition"), join(path, "condition"));
        if (j.contains("group_by")) {
            auto gb_path = join(path, "group_by");
            const auto& keys = j.at("group_by");
            expect_array(keys, gb_path);
            GroupBySpec gb;
            for (std::size_t i = 0; i < keys.size(); ++i) gb.keys.push_back(ref(keys[i], at(gb_path, i)));
            m.group_by = std::move(gb);
        }
        if (j.contains("output")) m.output = OutputSpec{text(j, path, "output")};
        return m;
    }

    EventType event_type(const Json& j, const std::string& path) {
        expect_object(j, path);
        only_keys(j, path, {"name", "attributes"});
        EventType e{text(j, path, "name"), {}};
        auto attrs_path = join(path, "attributes");
        const auto& attrs = member(j, path, "attributes");
        expect_array(attrs, attrs_path);
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            auto p = at(attrs_path, i);
            expect_object(attrs[i], p);
            only_keys(attrs[i], p, {"name", "kind"});
            e.attributes.push_back(
                {text(attrs[i], p, "name"), parse_enum(kAttrKinds, text(attrs[i], p, "kind"), join(p, "kind"),
                                                       "attribute kind")});
        }
        return e;
    }

    TargetBinding target(const Json& j, const std::string& path) {
        expect_object(j, path);
        only_keys(j, path, {"event", "alias", "window", "group_win"});
        TargetBinding t;
        t.event_name = text(j, path, "event");
        t.alias = optional_text(j, path, "alias");
        if (j.contains("window")) t.window = window(j.at("window"), join(path, "window"));
        if (j.contains("group_win")) {
            auto gw_path = join(path, "group_win");
            const auto& keys = j.at("group_win");
            expect_array(keys, gw_path);
            for (std::size_t i = 0; i < keys.size(); ++i) {
                if (!keys[i].is_string()) throw Failure{at(gw_path, i), "expected a string"};
                t.group_win.push_back(keys[i].get<std::string>());
            }
        }
        return t;
    }

    Window window(const Json& j, const std::string& path) {
        expect_object(j, path);
        auto kind = parse_enum(kWindowKinds, text(j, path, "kind"), join(path, "kind"), "window kind");
        switch (kind) {
            case WindowKind::Timer:
                only_keys(j, path, {"kind", "seconds"});
                return Window::timer(number(j, path, "seconds"));
            case WindowKind::Counter:
                only_keys(j, path, {"kind", "count"});
                return Window::counter(integer(j, path, "count"));
            case WindowKind::KeepAll:
                only_keys(j, path, {"kind"});
                return Window::keep_all();
        }
        return {};
    }

    SelectItem select_item(const Json& j, const std::string& path) {
        expect_object(j, path);
        only_keys(j, path, {"star", "expr", "alias"});
        SelectItem item;
        if (j.contains("star")) {
            if (j.contains("expr")) throw Failure{join(path, "expr"), "a star item has no expression"};
            if (!j.at("star").is_boolean() || !j.at("star").get<bool>())
                throw Failure{join(path, "star"), "expected true"};
        } else {
            item.expr = expression(member(j, path, "expr"), join(path, "expr"));
        }
        item.alias = optional_text(j, path, "alias");
        return item;
    }

    AttrRef ref(const Json& j, const std::string& path) {
        expect_object(j, path);
        only_keys(j, path, {"alias", "attr"});
        return AttrRef{optional_text(j, path, "alias"), text(j, path, "attr")};
    }

    Expression operand(const Json& j, const std::string& path, const std::string& key) {
        return expression(member(j, path, key), join(path, key));
    }

    std::vector<Expression> expressions(const Json& j, const std::string& path, const std::string& key) {
        auto p = join(path, key);
        const auto& arr = member(j, path, key);
        expect_array(arr, p);
        std::vector<Expression> out;
        for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(expression(arr[i], at(p, i)));
        return out;
    }

    Expression expression(const Json& j, const std::string& path) {
        expect_object(j, path);
        if (j.contains("ref")) {
            only_keys(j, path, {"ref"});
            return Expression{ref(j.at("ref"), join(path, "ref"))};
        }
        if (j.contains("literal")) {
            only_keys(j, path, {"literal"});
            const auto& v = j.at("literal");
            if (v.is_boolean()) return Expression{Literal{v.get<bool>()}};
            if (v.is_number_integer()) return Expression{Literal{v.get<std::int64_t>()}};
            if (v.is_number_float()) return Expression{Literal{v.get<double>()}};
            if (v.is_string()) return Expression{Literal{v.get<std::string>()}};
            throw Failure{join(path, "literal"), "expected a number, string or boolean"};
        }
        if (j.contains("agg")) {
            only_keys(j, path, {"agg", "target"});
            AggCall call;
            call.fn = parse_enum(kAggFns, text(j, path, "agg"), join(path, "agg"), "aggregation");
            if (j.contains("target")) call.target = ref(j.at("target"), join(path, "target"));
            return Expression{call};
        }
        if (j.contains("call")) {
            only_keys(j, path, {"call", "args"});
            return Expression{ScalarCall{parse_enum(kScalarFns, text(j, path, "call"), join(path, "call"), "function"),
                                         expressions(j, path, "args")}};
        }
        if (j.contains("compare")) {
            only_keys(j, path, {"compare", "lhs", "rhs"});
            auto op = parse_enum(kCompareOps, text(j, path, "compare"), join(path, "compare"), "comparison");
            return Expression{Compare{op, operand(j, path, "lhs"), operand(j, path, "rhs")}};
        }
        if (j.contains("logical")) {
            only_keys(j, path, {"logical", "args"});
            auto op = parse_enum(kLogicalOps, text(j, path, "logical"), join(path, "logical"), "logical operator");
            return Expression{Logical{op, expressions(j, path, "args")}};
        }
        if (j.contains("arith")) {
            only_keys(j, path, {"arith", "lhs", "rhs"});
            auto op = parse_enum(kArithOps, text(j, path, "arith"), join(path, "arith"), "arithmetic operator");
            return Expression{Arith{op, operand(j, path, "lhs"), operand(j, path, "rhs")}};
        }
        throw Failure{path, "expected one of ref, literal, agg, call, compare, logical, arith"};
    }

    PatternNode pattern(const Json& j, const std::string& path) {
        expect_object(j, path);
        PatternNode n;
        if (j.contains("event")) {
            only_keys(j, path, {"event", "guard", "repetition"});
            auto p = join(path, "event");
            const auto& ev = j.at("event");
            expect_object(ev, p);
            only_keys(ev, p, {"alias", "tag", "filter"});
            EventRef ref{text(ev, p, "alias"), std::nullopt, optional_text(ev, p, "tag")};
            if (ev.contains("filter")) ref.filter = expression(ev.at("filter"), join(p, "filter"));
            n.node = std::move(ref);
        } else if (j.contains("op")) {
            only_keys(j, path, {"op", "children", "guard", "repetition"});
            PatternComposite c;
            c.op = parse_enum(kPatternOps, text(j, path, "op"), join(path, "op"), "pattern operator");
            auto p = join(path, "children");
            const auto& children = member(j, path, "children");
            expect_array(children, p);
            for (std::size_t i = 0; i < children.size(); ++i) c.children.push_back(pattern(children[i], at(p, i)));
            n.node = std::move(c);
        } else {
            throw Failure{path, "expected an event or an op"};
        }
        if (j.contains("guard")) n.guard = guard(j.at("guard"), join(path, "guard"));
        if (j.contains("repetition")) n.repetition = repetition(j.at("repetition"), join(path, "repetition"));
        return n;
    }

    PatternGuard guard(const Json& j, const std::string& path) {
        expect_object(j, path);
        PatternGuard g;
        g.kind = parse_enum(kGuardKinds, text(j, path, "kind"), join(path, "kind"), "guard kind");
        if (g.kind == GuardKind::Within) {
            only_keys(j, path, {"kind", "seconds"});
        } else {
            only_keys(j, path, {"kind", "seconds", "max_instances"});
            g.max_instances = integer(j, path, "max_instances");
        }
        g.seconds = number(j, path, "seconds");
        return g;
    }

    RepetitionSpec repetition(const Json& j, const std::string& path) {
        expect_object(j, path);
        RepetitionSpec r;
        r.kind = parse_enum(kRepetitionKinds, text(j, path, "kind"), join(path, "kind"), "repetition kind");
        switch (r.kind) {
            case RepetitionKind::Every: only_keys(j, path, {"kind"}); break;
            case RepetitionKind::EveryDistinct: {
                only_keys(j, path, {"kind", "distinct_keys"});
                auto p = join(path, "distinct_keys");
                const auto& keys = member(j, path, "distinct_keys");
                expect_array(keys, p);
                for (std::size_t i = 0; i < keys.size(); ++i) r.distinct_keys.push_back(ref(keys[i], at(p, i)));
                break;
            }
            case RepetitionKind::Range:
                only_keys(j, path, {"kind", "low", "high"});
                r.low = integer(j, path, "low");
                r.high = integer(j, path, "high");
                break;
            case RepetitionKind::While:
                only_keys(j, path, {"kind", "condition"});
                r.condition = operand(j, path, "condition");
                break;
            case RepetitionKind::Until:
                only_keys(j, path, {"kind", "until"});
                r.until = Box<PatternNode>(pattern(member(j, path, "until"), join(path, "until")));
                break;
        }
        return r;
    }
};

// Document path to model path: "rule.targets[0]" reads as "targets[0]".
std::string model_path(const std::string& doc_path) {
    if (doc_path == "rule") return "";
    if (doc_path.rfind("rule.", 0) == 0) return doc_path.substr(5);
    return doc_path;
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

Json number_json(double v) {
    if (std::trunc(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    return v;
}

Json ref_json(const AttrRef& r) {
    Json j = Json::object();
    if (!r.alias.empty()) j["alias"] = r.alias;
    j["attr"] = r.attr;
    return j;
}

Json expression_json(const Expression& e) {
    return std::visit(
        [](const auto& n) -> Json {
            using T = std::decay_t<decltype(n)>;
            Json j = Json::object();
            if constexpr (std::is_same_v<T, AttrRef>) {
                j["ref"] = ref_json(n);
            } else if constexpr (std::is_same_v<T, Literal>) {
                std::visit([&](const auto& v) { j["literal"] = v; }, n.value);
            } else if constexpr (std::is_same_v<T, AggCall>) {
                j["agg"] = to_string(n.fn);
                if (n.target) j["target"] = ref_json(*n.target);
            } else if constexpr (std::is_same_v<T, ScalarCall>) {
                j["call"] = to_string(n.fn);
                j["args"] = Json::array();
                for (const auto& a : n.args) j["args"].push_back(expression_json(a));
            } else if constexpr (std::is_same_v<T, Compare>) {
                j["compare"] = to_string(n.op);
                j["lhs"] = expression_json(*n.lhs);
                j["rhs"] = expression_json(*n.rhs);
            } else if constexpr (std::is_same_v<T, Logical>) {
                j["logical"] = to_string(n.op);
                j["args"] = Json::array();
                for (const auto& a : n.args) j["args"].push_back(expression_json(a));
            } else {
                j["arith"] = to_string(n.op);
                j["lhs"] = expression_json(*n.lhs);
                j["rhs"] = expression_json(*n.rhs);
            }
            return j;
        },
        e.node);
}

Json pattern_json(const PatternNode& n) {
    Json j = Json::object();
    if (const auto* ev = n.as_event()) {
        Json e = Json::object();
        e["alias"] = ev->alias;
        if (!ev->tag.empty()) e["tag"] = ev->tag;
        if (ev->filter) e["filter"] = expression_json(*ev->filter);
        j["event"] = std::move(e);
    } else {
        const auto& c = *n.as_composite();
        j["op"] = to_string(c.op);
        j["children"] = Json::array();
        for (const auto& child : c.children) j["children"].push_back(pattern_json(child));
    }
    if (n.guard) {
        Json g = Json::object();
        g["kind"] = to_string(n.guard->kind);
        g["seconds"] = number_json(n.guard->seconds);
        if (n.guard->kind == GuardKind::WithinMax) g["max_instances"] = n.guard->max_instances;
        j["guard"] = std::move(g);
    }
    if (n.repetition) {
        const auto& r = *n.repetition;
        Json rj = Json::object();
        rj["kind"] = to_string(r.kind);
        switch (r.kind) {
            case RepetitionKind::Every: break;
            case RepetitionKind::EveryDistinct:
                rj["distinct_keys"] = Json::array();
                for (const auto& k : r.distinct_keys) rj["distinct_keys"].push_back(ref_json(k));
                break;
            case RepetitionKind::Range:
                rj["low"] = r.low;
                rj["high"] = r.high;
                break;
            case RepetitionKind::While:
                if (r.condition) rj["condition"] = expression_json(*r.condition);
                break;
            case RepetitionKind::Until:
                if (r.until) rj["until"] = pattern_json(**r.until);
                break;
        }
        j["repetition"] = std::move(rj);
    }
    return j;
}

}  // namespace

ModelDocument model_from_json(const Json& doc, const std::string& path_prefix) {
    try {
        return Reader().document(doc);
    } catch (const Failure& f) {
        throw ModelParseError({ParseError{0, 0, path_prefix + model_path(f.doc_path), f.message}});
    }
}

ModelDocument parse_model(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        auto pos = detail::position_at(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string message = e.what();
        if (auto cut = message.find("syntax error"); cut != std::string::npos) message = message.substr(cut);
        throw ModelParseError({ParseError{pos.line, pos.column, "", message}});
    }
    try {
        return Reader().document(doc);
    } catch (const Failure& f) {
        ParseError err{0, 0, model_path(f.doc_path), f.message};
        auto found = detail::locate_values(text);
        // A missing key has no position of its own; report its enclosing value.
        for (std::string p = f.doc_path;;) {
            if (auto it = found.find(p); it != found.end()) {
                err.line = it->second.line;
                err.column = it->second.column;
                break;
            }
            auto cut = p.find_last_of(".[");
            if (cut == std::string::npos) break;
            p.erase(cut);
        }
        throw ModelParseError({std::move(err)});
    }
}

Json model_to_json(const RuleModel& m, const std::optional<Json>& editor_meta) {
    Json rule = Json::object();
    rule["name"] = m.name;
    rule["events"] = Json::array();
    for (const auto& e : m.events) {
        Json ej = Json::object();
        ej["name"] = e.name;
        ej["attributes"] = Json::array();
        for (const auto& a : e.attributes) {
            Json aj = Json::object();
            aj["name"] = a.name;
            aj["kind"] = to_string(a.kind);
            ej["attributes"].push_back(std::move(aj));
        }
        rule["events"].push_back(std::move(ej));
    }
    rule["targets"] = Json::array();
    for (const auto& t : m.targets) {
        Json tj = Json::object();
        tj["event"] = t.event_name;
        if (!t.alias.empty()) tj["alias"] = t.alias;
        if (t.window) {
            Json w = Json::object();
            w["kind"] = to_string(t.window->kind);
            if (t.window->kind == WindowKind::Timer) w["seconds"] = number_json(t.window->seconds);
            if (t.window->kind == WindowKind::Counter) w["count"] = t.window->count;
            tj["window"] = std::move(w);
        }
        if (!t.group_win.empty()) tj["group_win"] = t.group_win;
        rule["targets"].push_back(std::move(tj));
    }
    if (m.pattern) rule["pattern"] = pattern_json(*m.pattern);
    rule["bring"] = Json::array();
    for (const auto& item : m.bring) {
        Json ij = Json::object();
        if (item.is_star()) ij["star"] = true;
        else ij["expr"] = expression_json(*item.expr);
        if (!item.alias.empty()) ij["alias"] = item.alias;
        rule["bring"].push_back(std::move(ij));
    }
    if (m.condition) rule["condition"] = expression_json(*m.condition);
    if (m.group_by) {
        rule["group_by"] = Json::array();
        for (const auto& k : m.group_by->keys) rule["group_by"].push_back(ref_json(k));
    }
    if (m.output) rule["output"] = m.output->name;

    Json doc = Json::object();
    doc["format_version"] = kFormatVersion;
    doc["rule"] = std::move(rule);
    if (editor_meta) doc["editor_meta"] = *editor_meta;
    return doc;
}

std::string serialize_model(const RuleModel& model, const std::optional<Json>& editor_meta) {
    return model_to_json(model, editor_meta).dump(2) + "\n";
}

}  // namespace cepdsl
