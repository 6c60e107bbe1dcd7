#include "plan.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cepdsl/errors.hpp"

namespace cepdsl {

std::string value_text(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "null";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
            else if constexpr (std::is_same_v<T, double>) return format_number(x);
            else if constexpr (std::is_same_v<T, std::string>) return "'" + x + "'";
            else return x ? "true" : "false";
        },
        v);
}

const Value* OutputRow::find(std::string_view column) const {
    for (const auto& [name, value] : values)
        if (name == column) return &value;
    return nullptr;
}

}  // namespace cepdsl

namespace cepdsl::detail {

namespace {

bool is_number(const Value& v) {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

// Three-way comparison of two non-null values of compatible kinds.
std::optional<int> order(const Value& a, const Value& b) {
    if (is_number(a) && is_number(b)) {
        if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
            auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
            return x < y ? -1 : x > y ? 1 : 0;
        }
        double x = as_double(a), y = as_double(b);
        return x < y ? -1 : x > y ? 1 : 0;
    }
    if (a.index() != b.index()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&a)) {
        int c = s->compare(std::get<std::string>(b));
        return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
    if (const auto* x = std::get_if<bool>(&a)) {
        bool y = std::get<bool>(b);
        return *x == y ? 0 : (*x ? 1 : -1);
    }
    return std::nullopt;
}

Value compare(CompareOp op, const Value& a, const Value& b) {
    if (is_null(a) || is_null(b)) return {};
    auto c = order(a, b);
    if (!c) return {};
    switch (op) {
        case CompareOp::Eq: return *c == 0;
        case CompareOp::Ne: return *c != 0;
        case CompareOp::Lt: return *c < 0;
        case CompareOp::Le: return *c <= 0;
        case CompareOp::Gt: return *c > 0;
        case CompareOp::Ge: return *c >= 0;
    }
    return {};
}

Value arithmetic(ArithOp op, const Value& a, const Value& b) {
    if (!is_number(a) || !is_number(b)) return {};
    if (op == ArithOp::Div) {
        double d = as_double(b);
        if (d == 0.0) return {};
        return as_double(a) / d;
    }
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
        auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        switch (op) {
            case ArithOp::Add: return x + y;
            case ArithOp::Sub: return x - y;
            default: return x * y;
        }
    }
    double x = as_double(a), y = as_double(b);
    switch (op) {
        case ArithOp::Add: return x + y;
        case ArithOp::Sub: return x - y;
        default: return x * y;
    }
}

Value attribute(const Row& row, int slot, const std::string& attr) {
    const auto* rec = row[static_cast<std::size_t>(slot)];
    if (!rec) return {};
    auto it = rec->event.attrs.find(attr);
    return it == rec->event.attrs.end() ? Value{} : it->second;
}

Value fold(const CompiledExpr& e, std::span<const Row> group) {
    if (e.star) return static_cast<std::int64_t>(group.size());
    std::vector<Value> inputs;
    inputs.reserve(group.size());
    for (const auto& row : group) inputs.push_back(attribute(row, e.slot, e.attr));
    return aggregate(e.agg, inputs);
}

}  // namespace

bool truthy(const Value& v) {
    const auto* b = std::get_if<bool>(&v);
    return b && *b;
}

Value aggregate(AggFn fn, std::span<const Value> inputs) {
    std::vector<const Value*> present;
    for (const auto& v : inputs)
        if (!is_null(v)) present.push_back(&v);
    if (fn == AggFn::Count) return static_cast<std::int64_t>(present.size());
    if (present.empty()) return {};
    switch (fn) {
        case AggFn::Sum:
        case AggFn::Avg: {
            bool integral = std::all_of(present.begin(), present.end(),
                                        [](const Value* v) { return std::holds_alternative<std::int64_t>(*v); });
            if (fn == AggFn::Sum && integral) {
                std::int64_t total = 0;
                for (const auto* v : present) total += std::get<std::int64_t>(*v);
                return total;
            }
            double total = 0.0;
            for (const auto* v : present) total += as_double(*v);
            if (fn == AggFn::Sum) return total;
            return total / static_cast<double>(present.size());
        }
        case AggFn::Max:
        case AggFn::Min: {
            const Value* best = present.front();
            for (const auto* v : present) {
                auto c = order(*v, *best);
                if (!c) continue;
                if ((fn == AggFn::Max && *c > 0) || (fn == AggFn::Min && *c < 0)) best = v;
            }
            return *best;
        }
        case AggFn::Count: break;
    }
    return {};
}

Value evaluate(const CompiledExpr& e, const Row& row, std::span<const Row> group) {
    using Op = CompiledExpr::Op;
    switch (e.op) {
        case Op::Ref: return attribute(row, e.slot, e.attr);
        case Op::Const: return e.constant;
        case Op::Agg: return fold(e, group);
        case Op::Scalar: {
            Value a = evaluate(e.kids[0], row, group);
            Value b = evaluate(e.kids[1], row, group);
            if (is_null(a) || is_null(b)) return {};
            auto c = order(a, b);
            if (!c) return {};
            bool first = e.scalar == ScalarFnName::Max2 ? *c >= 0 : *c <= 0;
            return first ? a : b;
        }
        case Op::Compare: return compare(e.compare, evaluate(e.kids[0], row, group), evaluate(e.kids[1], row, group));
        case Op::And: {
            bool unknown = false;
            for (const auto& k : e.kids) {
                Value v = evaluate(k, row, group);
                if (is_null(v)) unknown = true;
                else if (!truthy(v)) return false;
            }
            return unknown ? Value{} : Value{true};
        }
        case Op::Or: {
            bool unknown = false;
            for (const auto& k : e.kids) {
                Value v = evaluate(k, row, group);
                if (is_null(v)) unknown = true;
                else if (truthy(v)) return true;
            }
            return unknown ? Value{} : Value{false};
        }
        case Op::Not: {
            Value v = evaluate(e.kids[0], row, group);
            if (is_null(v)) return {};
            return !truthy(v);
        }
        case Op::Arith:
            return arithmetic(e.arith, evaluate(e.kids[0], row, group), evaluate(e.kids[1], row, group));
    }
    return {};
}

bool holds(const CompiledExpr& condition, const Row& row) { return truthy(evaluate(condition, row)); }

bool PatternPlan::leaf_matches(const EventRecord& e, std::size_t slot_count) const {
    if (e.event.type_name != event_type) return false;
    if (!filter) return true;
    Row row(slot_count, nullptr);
    row[static_cast<std::size_t>(slot)] = &e;
    return holds(*filter, row);
}

std::int64_t duration_ms(double seconds) { return static_cast<std::int64_t>(std::ceil(seconds * 1000.0)); }

namespace {

class Compiler {
public:
    explicit Compiler(const RuleModel& m) : m_(m) {}

    Plan run() {
        if (m_.pattern) {
            assign_pattern_slots(*m_.pattern, false);
            plan_.pattern = pattern(*m_.pattern);
        } else {
            for (const auto& t : m_.targets) {
                plan_.slots.push_back({effective_alias(t), t.event_name, m_.find_event(t.event_name), false});
                TargetPlan tp{t.event_name, t.window, 0, t.group_win};
                if (t.window && t.window->kind == WindowKind::Timer) tp.window_ms = duration_ms(t.window->seconds);
                plan_.targets.push_back(std::move(tp));
            }
        }
        columns();
        if (m_.condition) plan_.condition = expr(*m_.condition, -1);
        if (m_.group_by)
            for (const auto& k : m_.group_by->keys) plan_.group_keys.push_back(ref(k, -1));
        plan_.aggregating = m_.group_by.has_value() ||
                            std::any_of(m_.bring.begin(), m_.bring.end(), [](const SelectItem& s) {
                                return s.expr && contains_aggregate(*s.expr);
                            });
        if (m_.output) plan_.output = m_.output->name;
        return std::move(plan_);
    }

private:
    int slot_of(const std::string& name) const {
        for (std::size_t i = 0; i < plan_.slots.size(); ++i)
            if (plan_.slots[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::string event_of_alias(const std::string& alias) const {
        for (const auto& t : m_.targets)
            if (effective_alias(t) == alias) return t.event_name;
        return alias;
    }

    void assign_pattern_slots(const PatternNode& n, bool negated) {
        if (const auto* ev = n.as_event()) {
            int s = slot_of(ev->binding());
            if (s < 0) {
                auto type = event_of_alias(ev->alias);
                plan_.slots.push_back({ev->binding(), type, m_.find_event(type), negated});
            } else if (!negated) {
                plan_.slots[static_cast<std::size_t>(s)].negated_only = false;
            }
            return;
        }
        const auto& c = *n.as_composite();
        for (const auto& child : c.children) assign_pattern_slots(child, negated || c.op == PatternOp::Not);
    }

    PatternPlan pattern(const PatternNode& n) {
        PatternPlan p;
        if (const auto* ev = n.as_event()) {
            p.kind = PatternPlan::Kind::Leaf;
            p.slot = slot_of(ev->binding());
            p.event_type = plan_.slots[static_cast<std::size_t>(p.slot)].event_type;
            if (ev->filter) p.filter = expr(*ev->filter, p.slot);
        } else {
            const auto& c = *n.as_composite();
            p.kind = c.op == PatternOp::And ? PatternPlan::Kind::And
                     : c.op == PatternOp::Or ? PatternPlan::Kind::Or
                                             : PatternPlan::Kind::FollowedBy;
            for (const auto& child : c.children) {
                if (const auto* inner = child.as_composite(); inner && inner->op == PatternOp::Not) {
                    p.negated.push_back(pattern(inner->children.front()));
                } else {
                    p.children.push_back(pattern(child));
                    p.multi = p.multi || p.children.back().multi;
                }
            }
        }
        if (n.guard) p.within_ms = duration_ms(n.guard->seconds);
        if (n.repetition) {
            p.every = true;
            p.multi = true;
        }
        return p;
    }

    CompiledExpr ref(const AttrRef& r, int filter_slot) const {
        CompiledExpr e;
        e.op = CompiledExpr::Op::Ref;
        e.attr = r.attr;
        if (filter_slot >= 0) {
            e.slot = filter_slot;
        } else {
            auto res = resolve(m_, r.alias, r.attr);
            e.slot = slot_of(res.binding);
        }
        return e;
    }

    CompiledExpr expr(const Expression& x, int filter_slot) const {
        using Op = CompiledExpr::Op;
        return std::visit(
            [&](const auto& n) -> CompiledExpr {
                using T = std::decay_t<decltype(n)>;
                CompiledExpr e;
                if constexpr (std::is_same_v<T, AttrRef>) {
                    return ref(n, filter_slot);
                } else if constexpr (std::is_same_v<T, Literal>) {
                    e.op = Op::Const;
                    e.constant = std::visit([](const auto& v) -> Value { return v; }, n.value);
                } else if constexpr (std::is_same_v<T, AggCall>) {
                    e.op = Op::Agg;
                    e.agg = n.fn;
                    if (n.target) {
                        auto r = ref(*n.target, filter_slot);
                        e.slot = r.slot;
                        e.attr = r.attr;
                    } else {
                        e.star = true;
                    }
                } else if constexpr (std::is_same_v<T, ScalarCall>) {
                    e.op = Op::Scalar;
                    e.scalar = n.fn;
                    for (const auto& a : n.args) e.kids.push_back(expr(a, filter_slot));
                } else if constexpr (std::is_same_v<T, Compare>) {
                    e.op = Op::Compare;
                    e.compare = n.op;
                    e.kids.push_back(expr(*n.lhs, filter_slot));
                    e.kids.push_back(expr(*n.rhs, filter_slot));
                } else if constexpr (std::is_same_v<T, Logical>) {
                    e.op = n.op == LogicalOp::And ? Op::And : n.op == LogicalOp::Or ? Op::Or : Op::Not;
                    for (const auto& a : n.args) e.kids.push_back(expr(a, filter_slot));
                } else {
                    e.op = Op::Arith;
                    e.arith = n.op;
                    e.kids.push_back(expr(*n.lhs, filter_slot));
                    e.kids.push_back(expr(*n.rhs, filter_slot));
                }
                return e;
            },
            x.node);
    }

    void star_columns() {
        std::size_t carrying = 0;
        for (const auto& s : plan_.slots) carrying += s.negated_only ? 0 : 1;
        for (std::size_t i = 0; i < plan_.slots.size(); ++i) {
            const auto& s = plan_.slots[i];
            if (s.negated_only || !s.schema) continue;
            for (const auto& a : s.schema->attributes) {
                CompiledExpr e;
                e.op = CompiledExpr::Op::Ref;
                e.slot = static_cast<int>(i);
                e.attr = a.name;
                plan_.columns.push_back({carrying == 1 ? a.name : s.name + "." + a.name, std::move(e)});
            }
        }
    }

    void columns() {
        if (m_.bring.empty()) star_columns();
        for (const auto& item : m_.bring) {
            if (item.is_star()) star_columns();
            else plan_.columns.push_back({column_name(item), expr(*item.expr, -1)});
        }
    }

    const RuleModel& m_;
    Plan plan_;
};

}  // namespace

Plan compile_plan(const RuleModel& model) { return Compiler(model).run(); }

OutputRow project(const Plan& plan, std::int64_t now, const Row& representative, std::span<const Row> group) {
    OutputRow out;
    out.emitted_at = now;
    out.derived_event_name = plan.output;
    for (const auto& c : plan.columns) out.values.emplace_back(c.name, evaluate(c.expr, representative, group));
    return out;
}

std::vector<Value> group_key(const Plan& plan, const Row& row) {
    std::vector<Value> key;
    for (const auto& k : plan.group_keys) key.push_back(evaluate(k, row));
    return key;
}

std::vector<std::int64_t> row_key(const Row& row) {
    std::vector<std::int64_t> key;
    key.reserve(row.size());
    for (const auto* r : row) key.push_back(r ? r->seq : -1);
    return key;
}

}  // namespace cepdsl::detail
