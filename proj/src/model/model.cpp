#include "cepdsl/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace cepdsl {

bool ScalarCall::operator==(const ScalarCall& o) const { return fn == o.fn && args == o.args; }
bool Compare::operator==(const Compare& o) const { return op == o.op && lhs == o.lhs && rhs == o.rhs; }
bool Logical::operator==(const Logical& o) const { return op == o.op && args == o.args; }
bool Arith::operator==(const Arith& o) const { return op == o.op && lhs == o.lhs && rhs == o.rhs; }
bool PatternComposite::operator==(const PatternComposite& o) const {
    return op == o.op && children == o.children;
}
bool RepetitionSpec::operator==(const RepetitionSpec& o) const {
    return kind == o.kind && distinct_keys == o.distinct_keys && low == o.low && high == o.high &&
           condition == o.condition && until == o.until;
}

const Attribute* EventType::find(std::string_view attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

const EventType* RuleModel::find_event(std::string_view event_name) const {
    for (const auto& e : events)
        if (e.name == event_name) return &e;
    return nullptr;
}

void for_each_attr_ref(const Expression& expr, const std::function<void(const AttrRef&)>& fn) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AttrRef>) {
                fn(n);
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (n.target) fn(*n.target);
            } else if constexpr (std::is_same_v<T, ScalarCall> || std::is_same_v<T, Logical>) {
                for (const auto& a : n.args) for_each_attr_ref(a, fn);
            } else if constexpr (std::is_same_v<T, Compare> || std::is_same_v<T, Arith>) {
                for_each_attr_ref(*n.lhs, fn);
                for_each_attr_ref(*n.rhs, fn);
            }
        },
        expr.node);
}

bool contains_aggregate(const Expression& expr) {
    return std::visit(
        [](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AggCall>) {
                return true;
            } else if constexpr (std::is_same_v<T, ScalarCall> || std::is_same_v<T, Logical>) {
                return std::any_of(n.args.begin(), n.args.end(),
                                   [](const Expression& a) { return contains_aggregate(a); });
            } else if constexpr (std::is_same_v<T, Compare> || std::is_same_v<T, Arith>) {
                return contains_aggregate(*n.lhs) || contains_aggregate(*n.rhs);
            } else {
                return false;
            }
        },
        expr.node);
}

void for_each_pattern_node(const PatternNode& root, const std::string& path,
                           const std::function<void(const PatternNode&, const std::string&)>& fn) {
    fn(root, path);
    if (const auto* c = root.as_composite()) {
        for (std::size_t i = 0; i < c->children.size(); ++i)
            for_each_pattern_node(c->children[i], path + ".children[" + std::to_string(i) + "]", fn);
    }
    if (root.repetition && root.repetition->until)
        for_each_pattern_node(**root.repetition->until, path + ".repetition.until", fn);
}

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    auto head = static_cast<unsigned char>(text.front());
    if (!(std::isalpha(head) || head == '_')) return false;
    return std::all_of(text.begin(), text.end(), [](char ch) {
        auto c = static_cast<unsigned char>(ch);
        return std::isalnum(c) || c == '_';
    });
}

RuleModel new_model(std::string_view name) {
    if (!is_identifier(name))
        throw ModelError("invalid rule name '" + std::string(name) + "': expected an identifier");
    RuleModel model;
    model.name = std::string(name);
    return model;
}

std::string effective_alias(const TargetBinding& target) {
    if (!target.alias.empty()) return target.alias;
    std::string out = target.event_name;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

struct BindingCandidate {
    std::string name;
    const EventType* event = nullptr;
};

const TargetBinding* find_target(const RuleModel& model, std::string_view alias) {
    for (const auto& t : model.targets)
        if (effective_alias(t) == alias) return &t;
    return nullptr;
}

std::vector<BindingCandidate> bindings_in_scope(const RuleModel& model) {
    std::vector<BindingCandidate> out;
    auto add = [&](const std::string& name, const std::string& alias) {
        for (const auto& b : out)
            if (b.name == name) return;
        const auto* target = find_target(model, alias);
        out.push_back({name, target ? model.find_event(target->event_name) : nullptr});
    };
    if (model.pattern) {
        for_each_pattern_node(*model.pattern, "pattern", [&](const PatternNode& n, const std::string&) {
            if (const auto* ev = n.as_event()) add(ev->binding(), ev->alias);
        });
    } else {
        for (const auto& t : model.targets) add(effective_alias(t), effective_alias(t));
    }
    return out;
}

}  // namespace

Resolution resolve(const RuleModel& model, std::string_view alias, std::string_view attr) {
    Resolution res;
    auto candidates = bindings_in_scope(model);
    if (!alias.empty()) {
        auto it = std::find_if(candidates.begin(), candidates.end(),
                               [&](const BindingCandidate& b) { return b.name == alias; });
        if (it == candidates.end() || it->event == nullptr) {
            res.status = ResolveStatus::UnknownAlias;
            return res;
        }
        const auto* a = it->event->find(attr);
        if (a == nullptr) {
            res.status = ResolveStatus::UnknownAttribute;
            return res;
        }
        res = {ResolveStatus::Ok, *a, it->event->name, it->name};
        return res;
    }
    int hits = 0;
    for (const auto& b : candidates) {
        if (b.event == nullptr) continue;
        if (const auto* a = b.event->find(attr)) {
            if (++hits == 1) res = {ResolveStatus::Ok, *a, b.event->name, b.name};
        }
    }
    if (hits == 0) res.status = ResolveStatus::UnknownAttribute;
    if (hits > 1) res.status = ResolveStatus::Ambiguous;
    return res;
}

namespace {

void normalize_literals(Expression& expr) {
    std::visit(
        [](auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Literal>) {
                if (const auto* d = std::get_if<double>(&n.value)) {
                    constexpr double kExact = 9007199254740992.0;  // 2^53
                    if (std::isfinite(*d) && std::trunc(*d) == *d && std::fabs(*d) <= kExact)
                        n.value = static_cast<std::int64_t>(*d);
                }
            } else if constexpr (std::is_same_v<T, ScalarCall> || std::is_same_v<T, Logical>) {
                for (auto& a : n.args) normalize_literals(a);
            } else if constexpr (std::is_same_v<T, Compare> || std::is_same_v<T, Arith>) {
                normalize_literals(*n.lhs);
                normalize_literals(*n.rhs);
            }
        },
        expr.node);
}

void normalize_pattern(PatternNode& node) {
    if (auto* ev = std::get_if<EventRef>(&node.node)) {
        if (ev->filter) normalize_literals(*ev->filter);
    } else {
        for (auto& c : std::get<PatternComposite>(node.node).children) normalize_pattern(c);
    }
    if (node.repetition) {
        if (node.repetition->condition) normalize_literals(*node.repetition->condition);
        if (node.repetition->until) normalize_pattern(**node.repetition->until);
    }
}

}  // namespace

RuleModel canonicalize(const RuleModel& model) {
    RuleModel out = model;
    std::set<std::string> seen;
    for (auto& t : out.targets) {
        t.alias = effective_alias(t);
        if (!seen.insert(t.alias).second)
            throw ModelError("alias collision after defaulting: '" + t.alias + "'");
    }
    for (auto& item : out.bring)
        if (item.expr) normalize_literals(*item.expr);
    if (out.condition) normalize_literals(*out.condition);
    if (out.pattern) normalize_pattern(*out.pattern);
    return out;
}

std::string_view to_string(AttrKind kind) {
    switch (kind) {
        case AttrKind::Integer: return "integer";
        case AttrKind::Float: return "float";
        case AttrKind::String: return "string";
        case AttrKind::Boolean: return "boolean";
        case AttrKind::Timestamp: return "timestamp";
    }
    return "?";
}

std::string_view to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::Timer: return "timer";
        case WindowKind::Counter: return "counter";
        case WindowKind::KeepAll: return "keep_all";
    }
    return "?";
}

std::string_view to_string(AggFn fn) {
    switch (fn) {
        case AggFn::Avg: return "avg";
        case AggFn::Sum: return "sum";
        case AggFn::Max: return "max";
        case AggFn::Min: return "min";
        case AggFn::Count: return "count";
    }
    return "?";
}

std::string_view to_string(ScalarFnName fn) {
    return fn == ScalarFnName::Max2 ? "max2" : "min2";
}

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

std::string_view to_string(LogicalOp op) {
    switch (op) {
        case LogicalOp::And: return "and";
        case LogicalOp::Or: return "or";
        case LogicalOp::Not: return "not";
    }
    return "?";
}

std::string_view to_string(ArithOp op) {
    switch (op) {
        case ArithOp::Add: return "+";
        case ArithOp::Sub: return "-";
        case ArithOp::Mul: return "*";
        case ArithOp::Div: return "/";
    }
    return "?";
}

std::string_view to_string(GuardKind kind) {
    return kind == GuardKind::Within ? "within" : "within_max";
}

std::string_view to_string(RepetitionKind kind) {
    switch (kind) {
        case RepetitionKind::Every: return "every";
        case RepetitionKind::EveryDistinct: return "every_distinct";
        case RepetitionKind::Range: return "range";
        case RepetitionKind::While: return "while";
        case RepetitionKind::Until: return "until";
    }
    return "?";
}

std::string_view to_string(PatternOp op) {
    switch (op) {
        case PatternOp::And: return "and";
        case PatternOp::Or: return "or";
        case PatternOp::Not: return "not";
        case PatternOp::FollowedBy: return "followed_by";
    }
    return "?";
}

std::string format_number(double value) {
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) return std::to_string(value);
    return {buf, end};
}

namespace {

constexpr int kPrecOr = 1;
constexpr int kPrecAnd = 2;
constexpr int kPrecNot = 3;
constexpr int kPrecCompare = 4;
constexpr int kPrecAdd = 5;
constexpr int kPrecMul = 6;
constexpr int kPrecAtom = 7;

int precedence(const Expression& e) {
    if (const auto* l = std::get_if<Logical>(&e.node)) {
        switch (l->op) {
            case LogicalOp::Or: return kPrecOr;
            case LogicalOp::And: return kPrecAnd;
            case LogicalOp::Not: return kPrecNot;
        }
    }
    if (std::holds_alternative<Compare>(e.node)) return kPrecCompare;
    if (const auto* a = std::get_if<Arith>(&e.node))
        return (a->op == ArithOp::Add || a->op == ArithOp::Sub) ? kPrecAdd : kPrecMul;
    return kPrecAtom;
}

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'' || c == '\\') out += '\\';
        out += c;
    }
    return out + "'";
}

struct Printer {
    const std::function<std::string(const AttrRef&)>& ref_text;

    std::string ref(const AttrRef& r) const {
        if (ref_text) return ref_text(r);
        return r.alias.empty() ? r.attr : r.alias + "." + r.attr;
    }

    std::string wrap(const Expression& e, int min_prec) const {
        auto text = print(e);
        return precedence(e) < min_prec ? "(" + text + ")" : text;
    }

    std::string print(const Expression& e) const {
        return std::visit(
            [&](const auto& n) -> std::string {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, AttrRef>) {
                    return ref(n);
                } else if constexpr (std::is_same_v<T, Literal>) {
                    return std::visit(
                        [](const auto& v) -> std::string {
                            using V = std::decay_t<decltype(v)>;
                            if constexpr (std::is_same_v<V, std::int64_t>) return std::to_string(v);
                            else if constexpr (std::is_same_v<V, double>) return format_number(v);
                            else if constexpr (std::is_same_v<V, std::string>) return quote(v);
                            else return v ? "true" : "false";
                        },
                        n.value);
                } else if constexpr (std::is_same_v<T, AggCall>) {
                    return std::string(to_string(n.fn)) + "(" + (n.target ? ref(*n.target) : "*") + ")";
                } else if constexpr (std::is_same_v<T, ScalarCall>) {
                    std::string out = n.fn == ScalarFnName::Max2 ? "max(" : "min(";
                    for (std::size_t i = 0; i < n.args.size(); ++i) {
                        if (i) out += ", ";
                        out += print(n.args[i]);
                    }
                    return out + ")";
                } else if constexpr (std::is_same_v<T, Compare>) {
                    return wrap(*n.lhs, kPrecAdd) + " " + std::string(to_string(n.op)) + " " +
                           wrap(*n.rhs, kPrecAdd);
                } else if constexpr (std::is_same_v<T, Logical>) {
                    if (n.op == LogicalOp::Not) {
                        return "not " + (n.args.empty() ? std::string() : wrap(n.args.front(), kPrecNot));
                    }
                    int own = n.op == LogicalOp::And ? kPrecAnd : kPrecOr;
                    std::string out;
                    for (std::size_t i = 0; i < n.args.size(); ++i) {
                        if (i) out += n.op == LogicalOp::And ? " and " : " or ";
                        out += wrap(n.args[i], own + 1);
                    }
                    return out;
                } else {
                    int own = (n.op == ArithOp::Add || n.op == ArithOp::Sub) ? kPrecAdd : kPrecMul;
                    return wrap(*n.lhs, own) + " " + std::string(to_string(n.op)) + " " +
                           wrap(*n.rhs, own + 1);
                }
            },
            e.node);
    }
};

}  // namespace

std::string expression_text(const Expression& expr,
                            const std::function<std::string(const AttrRef&)>& ref_text) {
    return Printer{ref_text}.print(expr);
}

std::string column_name(const SelectItem& item) {
    if (!item.alias.empty()) return item.alias;
    if (item.expr) return expression_text(*item.expr);
    return "*";
}

namespace build {

Expression attr(std::string alias, std::string name) {
    return {AttrRef{std::move(alias), std::move(name)}};
}
Expression attr(std::string name) { return {AttrRef{{}, std::move(name)}}; }
Expression lit(std::int64_t value) { return {Literal{value}}; }
Expression lit(int value) { return {Literal{static_cast<std::int64_t>(value)}}; }
Expression lit(double value) { return {Literal{value}}; }
Expression lit(std::string value) { return {Literal{std::move(value)}}; }
Expression lit(const char* value) { return {Literal{std::string(value)}}; }
Expression lit(bool value) { return {Literal{value}}; }
Expression agg(AggFn fn, std::string alias, std::string name) {
    return {AggCall{fn, AttrRef{std::move(alias), std::move(name)}}};
}
Expression agg(AggFn fn, std::string name) { return agg(fn, {}, std::move(name)); }
Expression count_star() { return {AggCall{AggFn::Count, std::nullopt}}; }
Expression call(ScalarFnName fn, Expression a, Expression b) {
    ScalarCall c{fn, {}};
    c.args.push_back(std::move(a));
    c.args.push_back(std::move(b));
    return {std::move(c)};
}
Expression cmp(CompareOp op, Expression lhs, Expression rhs) {
    return {Compare{op, std::move(lhs), std::move(rhs)}};
}
Expression arith(ArithOp op, Expression lhs, Expression rhs) {
    return {Arith{op, std::move(lhs), std::move(rhs)}};
}
Expression all_of(std::vector<Expression> args) { return {Logical{LogicalOp::And, std::move(args)}}; }
Expression any_of(std::vector<Expression> args) { return {Logical{LogicalOp::Or, std::move(args)}}; }
Expression negate(Expression arg) {
    Logical l{LogicalOp::Not, {}};
    l.args.push_back(std::move(arg));
    return {std::move(l)};
}

SelectItem star() { return {}; }
SelectItem item(Expression expr, std::string alias) { return {std::move(expr), std::move(alias)}; }

PatternNode event(std::string alias, std::string tag, std::optional<Expression> filter) {
    return {EventRef{std::move(alias), std::move(filter), std::move(tag)}, std::nullopt, std::nullopt};
}

namespace {
PatternNode composite(PatternOp op, std::vector<PatternNode> children) {
    return {PatternComposite{op, std::move(children)}, std::nullopt, std::nullopt};
}
}  // namespace

PatternNode all_of(std::vector<PatternNode> children) { return composite(PatternOp::And, std::move(children)); }
PatternNode any_of(std::vector<PatternNode> children) { return composite(PatternOp::Or, std::move(children)); }
PatternNode negate(PatternNode child) {
    std::vector<PatternNode> children;
    children.push_back(std::move(child));
    return composite(PatternOp::Not, std::move(children));
}
PatternNode followed_by(std::vector<PatternNode> children) {
    return composite(PatternOp::FollowedBy, std::move(children));
}
PatternNode every(PatternNode node) {
    node.repetition = RepetitionSpec{};
    return node;
}
PatternNode within(PatternNode node, double seconds) {
    node.guard = PatternGuard{GuardKind::Within, seconds, 0};
    return node;
}
PatternNode within_max(PatternNode node, double seconds, std::int64_t max_instances) {
    node.guard = PatternGuard{GuardKind::WithinMax, seconds, max_instances};
    return node;
}

}  // namespace build

}  // namespace cepdsl
