#include "cepdsl/validator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace cepdsl {

std::string_view to_string(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

std::string format_diagnostic(const Diagnostic& d) {
    return d.code + " " + std::string(to_string(d.severity)) + " " + d.path + ": " + d.message;
}

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::Numeric: return "numeric";
        case ValueKind::String: return "string";
        case ValueKind::Boolean: return "boolean";
        case ValueKind::Timestamp: return "timestamp";
    }
    return "?";
}

ValueKind value_kind(AttrKind kind) {
    switch (kind) {
        case AttrKind::Integer:
        case AttrKind::Float: return ValueKind::Numeric;
        case AttrKind::String: return ValueKind::String;
        case AttrKind::Boolean: return ValueKind::Boolean;
        case AttrKind::Timestamp: return ValueKind::Timestamp;
    }
    return ValueKind::Numeric;
}

namespace {

bool numeric_like(ValueKind k) { return k == ValueKind::Numeric || k == ValueKind::Timestamp; }

std::string idx(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

std::string ref_text(const AttrRef& r) { return r.alias.empty() ? r.attr : r.alias + "." + r.attr; }

// Outcome of a reference lookup. `suppressed` marks references that only fail
// because their target names an undeclared event; V003 already covers those.
struct Lookup {
    Resolution res;
    bool suppressed = false;
};

using Resolver = std::function<Lookup(const AttrRef&)>;

class TypeChecker {
public:
    TypeChecker(Resolver resolver, std::vector<Diagnostic>& out) : resolver_(std::move(resolver)), out_(out) {}

    std::optional<ValueKind> check(const Expression& e, const std::string& path) {
        return std::visit([&](const auto& n) { return visit(n, path); }, e.node);
    }

    std::optional<ValueKind> ref_kind(const AttrRef& r, const std::string& path) {
        auto lookup = resolver_(r);
        if (lookup.res.ok()) return value_kind(lookup.res.attribute.kind);
        if (!lookup.suppressed) {
            std::string why = lookup.res.status == ResolveStatus::UnknownAlias      ? "unknown alias"
                              : lookup.res.status == ResolveStatus::Ambiguous       ? "ambiguous attribute"
                                                                                    : "unknown attribute";
            emit("V004", path, why + " in reference '" + ref_text(r) + "'");
        }
        return std::nullopt;
    }

private:
    void emit(const char* code, const std::string& path, std::string message) {
        out_.push_back({code, Severity::Error, path, std::move(message)});
    }

    std::optional<ValueKind> visit(const AttrRef& r, const std::string& path) { return ref_kind(r, path); }

    std::optional<ValueKind> visit(const Literal& l, const std::string&) {
        return std::visit(
            [](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, std::string>) return ValueKind::String;
                else if constexpr (std::is_same_v<V, bool>) return ValueKind::Boolean;
                else return ValueKind::Numeric;
            },
            l.value);
    }

    std::optional<ValueKind> visit(const AggCall& a, const std::string& path) {
        if (a.fn == AggFn::Count) {
            if (a.target) ref_kind(*a.target, path + ".target");
            return ValueKind::Numeric;
        }
        if (!a.target) {
            emit("V005", path, std::string(to_string(a.fn)) + "(*) needs a numeric attribute");
            return std::nullopt;
        }
        auto k = ref_kind(*a.target, path + ".target");
        if (!k) return std::nullopt;
        if (!numeric_like(*k)) {
            emit("V005", path,
                 std::string(to_string(a.fn)) + " over " + std::string(to_string(*k)) + " attribute '" +
                     ref_text(*a.target) + "'");
            return std::nullopt;
        }
        if (a.fn == AggFn::Avg || a.fn == AggFn::Sum) return ValueKind::Numeric;
        return k;
    }

    std::optional<ValueKind> visit(const ScalarCall& c, const std::string& path) {
        std::vector<std::optional<ValueKind>> kinds;
        for (std::size_t i = 0; i < c.args.size(); ++i) kinds.push_back(check(c.args[i], idx(path + ".args", i)));
        if (c.args.size() != 2) {
            emit("V010", path, std::string(to_string(c.fn)) + " takes exactly two arguments");
            return std::nullopt;
        }
        bool ok = true;
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (kinds[i] && !numeric_like(*kinds[i])) {
                emit("V010", idx(path + ".args", i),
                     std::string(to_string(c.fn)) + " argument is " + std::string(to_string(*kinds[i])));
                ok = false;
            }
            if (!kinds[i]) ok = false;
        }
        if (!ok) return std::nullopt;
        if (*kinds[0] == ValueKind::Timestamp && *kinds[1] == ValueKind::Timestamp) return ValueKind::Timestamp;
        return ValueKind::Numeric;
    }

    std::optional<ValueKind> visit(const Compare& c, const std::string& path) {
        auto l = check(*c.lhs, path + ".lhs");
        auto r = check(*c.rhs, path + ".rhs");
        if (!l || !r) return std::nullopt;
        bool compatible = *l == *r || (numeric_like(*l) && numeric_like(*r));
        if (!compatible) {
            emit("V010", path,
                 "cannot compare " + std::string(to_string(*l)) + " with " + std::string(to_string(*r)));
            return std::nullopt;
        }
        if (*l == ValueKind::Boolean && c.op != CompareOp::Eq && c.op != CompareOp::Ne) {
            emit("V010", path, "booleans only support = and !=");
            return std::nullopt;
        }
        return ValueKind::Boolean;
    }

    std::optional<ValueKind> visit(const Logical& l, const std::string& path) {
        bool ok = true;
        for (std::size_t i = 0; i < l.args.size(); ++i) {
            auto k = check(l.args[i], idx(path + ".args", i));
            if (!k) {
                ok = false;
            } else if (*k != ValueKind::Boolean) {
                emit("V010", idx(path + ".args", i),
                     "operand of '" + std::string(to_string(l.op)) + "' is " + std::string(to_string(*k)));
                ok = false;
            }
        }
        bool arity = l.op == LogicalOp::Not ? l.args.size() == 1 : l.args.size() >= 2;
        if (!arity) {
            emit("V010", path,
                 l.op == LogicalOp::Not ? "'not' takes exactly one operand"
                                        : "'" + std::string(to_string(l.op)) + "' takes two or more operands");
            ok = false;
        }
        return ok ? std::optional(ValueKind::Boolean) : std::nullopt;
    }

    std::optional<ValueKind> visit(const Arith& a, const std::string& path) {
        auto l = check(*a.lhs, path + ".lhs");
        auto r = check(*a.rhs, path + ".rhs");
        if (!l || !r) return std::nullopt;
        if (!numeric_like(*l) || !numeric_like(*r)) {
            emit("V010", path,
                 "arithmetic '" + std::string(to_string(a.op)) + "' on " + std::string(to_string(*l)) + " and " +
                     std::string(to_string(*r)));
            return std::nullopt;
        }
        return ValueKind::Numeric;
    }

    Resolver resolver_;
    std::vector<Diagnostic>& out_;
};

const TargetBinding* target_by_alias(const RuleModel& m, std::string_view alias) {
    for (const auto& t : m.targets)
        if (effective_alias(t) == alias) return &t;
    return nullptr;
}

bool has_undeclared_target(const RuleModel& m) {
    return std::any_of(m.targets.begin(), m.targets.end(),
                       [&](const TargetBinding& t) { return m.find_event(t.event_name) == nullptr; });
}

Resolver rule_resolver(const RuleModel& m) {
    return [&m](const AttrRef& r) {
        Lookup out{resolve(m, r.alias, r.attr), false};
        if (out.res.ok()) return out;
        if (r.alias.empty()) {
            out.suppressed = out.res.status == ResolveStatus::UnknownAttribute && has_undeclared_target(m);
            return out;
        }
        // A pattern binding or target alias whose event type is undeclared.
        std::string alias = r.alias;
        if (m.pattern) {
            for_each_pattern_node(*m.pattern, "", [&](const PatternNode& n, const std::string&) {
                if (const auto* ev = n.as_event(); ev && ev->binding() == r.alias) alias = ev->alias;
            });
        }
        if (const auto* t = target_by_alias(m, alias); t && m.find_event(t->event_name) == nullptr)
            out.suppressed = out.res.status == ResolveStatus::UnknownAlias;
        if (m.pattern && target_by_alias(m, alias) == nullptr && alias != r.alias)
            out.suppressed = true;  // the event reference itself is already reported
        return out;
    };
}

// Filters inside an event reference see only the referenced event, either
// unqualified or through the reference's own alias or tag.
Resolver filter_resolver(const RuleModel& m, const EventRef& ev) {
    return [&m, &ev](const AttrRef& r) {
        Lookup out;
        const auto* target = target_by_alias(m, ev.alias);
        const EventType* type = target ? m.find_event(target->event_name) : nullptr;
        if (type == nullptr) {
            out.suppressed = true;
            return out;
        }
        if (!r.alias.empty() && r.alias != ev.alias && r.alias != ev.binding()) {
            out.res.status = ResolveStatus::UnknownAlias;
            return out;
        }
        if (const auto* a = type->find(r.attr)) {
            out.res = {ResolveStatus::Ok, *a, type->name, ev.binding()};
        } else {
            out.res.status = ResolveStatus::UnknownAttribute;
        }
        return out;
    };
}

class Validator {
public:
    explicit Validator(const RuleModel& m) : m_(m) {}

    std::vector<Diagnostic> run() {
        check_names();
        check_targets();
        check_pattern();
        check_bring();
        check_condition();
        check_group_by();
        std::stable_sort(out_.begin(), out_.end(), [](const Diagnostic& a, const Diagnostic& b) {
            return std::tie(a.path, a.code) < std::tie(b.path, b.code);
        });
        return std::move(out_);
    }

private:
    void emit(const char* code, std::string path, std::string message) {
        out_.push_back({code, Severity::Error, std::move(path), std::move(message)});
    }

    void check_names() {
        if (!is_identifier(m_.name)) emit("V002", "name", "rule name '" + m_.name + "' is not an identifier");
        std::set<std::string> event_names;
        for (std::size_t i = 0; i < m_.events.size(); ++i) {
            const auto& e = m_.events[i];
            auto path = idx("events", i);
            if (!is_identifier(e.name)) emit("V002", path + ".name", "event name '" + e.name + "' is not an identifier");
            else if (!event_names.insert(e.name).second) emit("V002", path + ".name", "duplicate event '" + e.name + "'");
            std::set<std::string> attr_names;
            for (std::size_t j = 0; j < e.attributes.size(); ++j) {
                const auto& a = e.attributes[j];
                auto apath = idx(path + ".attributes", j) + ".name";
                if (!is_identifier(a.name)) emit("V002", apath, "attribute name '" + a.name + "' is not an identifier");
                else if (!attr_names.insert(a.name).second)
                    emit("V002", apath, "duplicate attribute '" + a.name + "' in event '" + e.name + "'");
            }
        }
        std::set<std::string> aliases;
        for (std::size_t i = 0; i < m_.targets.size(); ++i) {
            const auto& t = m_.targets[i];
            auto path = idx("targets", i) + ".alias";
            if (!t.alias.empty() && !is_identifier(t.alias)) {
                emit("V002", path, "alias '" + t.alias + "' is not an identifier");
            } else if (!aliases.insert(effective_alias(t)).second) {
                emit("V002", path, "duplicate target alias '" + effective_alias(t) + "'");
            }
        }
        if (m_.output) {
            if (!is_identifier(m_.output->name))
                emit("V002", "output.name", "output event name '" + m_.output->name + "' is not an identifier");
            else if (m_.find_event(m_.output->name))
                emit("V002", "output.name", "output event '" + m_.output->name + "' clashes with a declared event");
        }
    }

    void check_targets() {
        if (m_.targets.empty()) emit("V001", "targets", "rule has no target event");
        for (std::size_t i = 0; i < m_.targets.size(); ++i) {
            const auto& t = m_.targets[i];
            auto path = idx("targets", i);
            const auto* event = m_.find_event(t.event_name);
            if (event == nullptr) emit("V003", path + ".event", "undeclared event '" + t.event_name + "'");
            if (t.window) check_window(*t.window, path + ".window");
            for (std::size_t j = 0; j < t.group_win.size(); ++j) {
                if (event && event->find(t.group_win[j]) == nullptr)
                    emit("V004", idx(path + ".group_win", j),
                         "unknown attribute '" + t.group_win[j] + "' in event '" + event->name + "'");
            }
        }
    }

    void check_window(const Window& w, const std::string& path) {
        switch (w.kind) {
            case WindowKind::Timer:
                if (!(std::isfinite(w.seconds) && w.seconds > 0))
                    emit("V006", path + ".seconds", "timer window needs a positive duration");
                break;
            case WindowKind::Counter:
                if (w.count < 1) emit("V006", path + ".count", "counter window needs a count of at least 1");
                break;
            case WindowKind::KeepAll:
                if (w.seconds != 0 || w.count != 0) emit("V006", path, "keep_all window takes no parameter");
                break;
        }
    }

    void check_pattern() {
        if (!m_.pattern) return;
        std::set<std::string> tags;
        for_each_pattern_node(*m_.pattern, "pattern", [&](const PatternNode& n, const std::string& path) {
            if (const auto* ev = n.as_event()) {
                if (target_by_alias(m_, ev->alias) == nullptr)
                    emit("V004", path + ".alias", "pattern references unknown target alias '" + ev->alias + "'");
                if (!ev->tag.empty()) {
                    if (!is_identifier(ev->tag)) emit("V002", path + ".tag", "tag '" + ev->tag + "' is not an identifier");
                    else if (!tags.insert(ev->tag).second) emit("V007", path + ".tag", "duplicate pattern tag '" + ev->tag + "'");
                }
                if (ev->filter) check_boolean(*ev->filter, path + ".filter", filter_resolver(m_, *ev));
            } else {
                const auto& c = *n.as_composite();
                bool ok = c.op == PatternOp::Not ? c.children.size() == 1 : c.children.size() >= 2;
                if (!ok)
                    emit("V007", path,
                         c.op == PatternOp::Not ? "'not' takes exactly one child"
                                                : "'" + std::string(to_string(c.op)) + "' takes two or more children");
            }
            if (n.guard) {
                if (!(std::isfinite(n.guard->seconds) && n.guard->seconds > 0))
                    emit("V008", path + ".guard.seconds", "guard needs a positive duration");
                if (n.guard->kind == GuardKind::WithinMax && n.guard->max_instances < 1)
                    emit("V008", path + ".guard.max_instances", "within_max needs at least one instance");
            }
            if (n.repetition) check_repetition(*n.repetition, path + ".repetition");
        });
    }

    void check_repetition(const RepetitionSpec& r, const std::string& path) {
        switch (r.kind) {
            case RepetitionKind::Every: break;
            case RepetitionKind::EveryDistinct:
                if (r.distinct_keys.empty()) emit("V011", path, "every_distinct needs at least one key");
                for (std::size_t i = 0; i < r.distinct_keys.size(); ++i) {
                    TypeChecker tc(rule_resolver(m_), out_);
                    tc.ref_kind(r.distinct_keys[i], idx(path + ".distinct_keys", i));
                }
                break;
            case RepetitionKind::Range:
                if (r.low < 0 || r.high < r.low)
                    emit("V011", path, "range needs 0 <= low <= high, got [" + std::to_string(r.low) + ":" +
                                           std::to_string(r.high) + "]");
                break;
            case RepetitionKind::While:
                if (!r.condition) emit("V011", path, "while needs a condition");
                else check_boolean(*r.condition, path + ".condition", rule_resolver(m_));
                break;
            case RepetitionKind::Until:
                if (!r.until) emit("V011", path, "until needs a terminating pattern");
                break;
        }
    }

    void check_boolean(const Expression& e, const std::string& path, Resolver resolver) {
        TypeChecker tc(std::move(resolver), out_);
        auto k = tc.check(e, path);
        if (k && *k != ValueKind::Boolean) emit("V010", path, "condition is " + std::string(to_string(*k)) + ", not boolean");
    }

    void check_bring() {
        std::set<std::string> columns;
        for (std::size_t i = 0; i < m_.bring.size(); ++i) {
            const auto& item = m_.bring[i];
            auto path = idx("bring", i);
            if (!item.alias.empty() && !is_identifier(item.alias))
                emit("V002", path + ".alias", "select alias '" + item.alias + "' is not an identifier");
            if (item.is_star()) continue;
            TypeChecker tc(rule_resolver(m_), out_);
            tc.check(*item.expr, path + ".expr");
            auto name = column_name(item);
            if (!columns.insert(name).second) emit("V012", path + ".alias", "duplicate output column '" + name + "'");
        }
    }

    void check_condition() {
        if (m_.condition) check_boolean(*m_.condition, "condition", rule_resolver(m_));
    }

    void check_group_by() {
        if (!m_.group_by) return;
        std::set<std::pair<std::string, std::string>> keys;
        auto resolver = rule_resolver(m_);
        for (std::size_t i = 0; i < m_.group_by->keys.size(); ++i) {
            TypeChecker tc(resolver, out_);
            const auto& k = m_.group_by->keys[i];
            if (tc.ref_kind(k, idx("group_by.keys", i))) {
                auto res = resolve(m_, k.alias, k.attr);
                keys.insert({res.binding, res.attribute.name});
            }
        }
        for (std::size_t i = 0; i < m_.bring.size(); ++i) {
            const auto& item = m_.bring[i];
            auto path = idx("bring", i);
            if (item.is_star()) {
                emit("V009", path, "select * is not allowed with group by");
                continue;
            }
            bool reported = false;
            collect_plain_refs(*item.expr, [&](const AttrRef& r) {
                auto res = resolve(m_, r.alias, r.attr);
                if (!res.ok() || reported) return;
                if (!keys.count({res.binding, res.attribute.name})) {
                    emit("V009", path + ".expr", "'" + ref_text(r) + "' is neither aggregated nor a group key");
                    reported = true;
                }
            });
        }
    }

    // Attribute references outside aggregation calls.
    static void collect_plain_refs(const Expression& e, const std::function<void(const AttrRef&)>& fn) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, AttrRef>) {
                    fn(n);
                } else if constexpr (std::is_same_v<T, ScalarCall> || std::is_same_v<T, Logical>) {
                    for (const auto& a : n.args) collect_plain_refs(a, fn);
                } else if constexpr (std::is_same_v<T, Compare> || std::is_same_v<T, Arith>) {
                    collect_plain_refs(*n.lhs, fn);
                    collect_plain_refs(*n.rhs, fn);
                }
            },
            e.node);
    }

    const RuleModel& m_;
    std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const RuleModel& model) { return Validator(model).run(); }

TypeResult typecheck(const Expression& expr, const RuleModel& scope, const std::string& path) {
    TypeResult result;
    TypeChecker tc(rule_resolver(scope), result.diagnostics);
    auto kind = tc.check(expr, path);
    if (result.diagnostics.empty()) result.kind = kind;
    return result;
}

}  // namespace cepdsl
