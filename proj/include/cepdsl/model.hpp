#pragma once

// Typed in-memory representation of a CEP rule.
//
// A rule is split into four logical groups: the targets it listens to (each
// one binding an event type, optionally windowed and partitioned), the bring
// group (select list), the condition group (where clause) and the group-by
// condition. An optional event pattern replaces the plain stream join, and an
// optional output names the derived event.
//
// Model values are plain aggregates. Nothing here repairs or rejects a
// malformed rule: a model that breaks an invariant is representable and is
// reported by the validator.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cepdsl/box.hpp"

namespace cepdsl {

enum class AttrKind { Integer, Float, String, Boolean, Timestamp };

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::Integer;
    bool operator==(const Attribute&) const = default;
};

struct EventType {
    std::string name;
    std::vector<Attribute> attributes;
    bool operator==(const EventType&) const = default;

    const Attribute* find(std::string_view attr) const;
};

enum class WindowKind { Timer, Counter, KeepAll };

struct Window {
    WindowKind kind = WindowKind::KeepAll;
    double seconds = 0.0;     // timer only
    std::int64_t count = 0;   // counter only
    bool operator==(const Window&) const = default;

    static Window timer(double seconds) { return {WindowKind::Timer, seconds, 0}; }
    static Window counter(std::int64_t count) { return {WindowKind::Counter, 0.0, count}; }
    static Window keep_all() { return {WindowKind::KeepAll, 0.0, 0}; }
};

struct TargetBinding {
    std::string event_name;
    std::string alias;  // empty: implicit, defaults to the lowercased event name
    std::optional<Window> window;
    std::vector<std::string> group_win;  // std:groupwin partition keys
    bool operator==(const TargetBinding&) const = default;
};

// ---------------------------------------------------------------------------
// Expressions
//
// One recursive tree covers both conditions and operands. Attribute
// references, literals, aggregation calls and the two-argument scalar
// functions are the leaves; comparisons, logical and arithmetic operators are
// the inner nodes.
// ---------------------------------------------------------------------------

struct Expression;

struct AttrRef {
    std::string alias;  // empty: unqualified, resolved against every binding in scope
    std::string attr;
    bool operator==(const AttrRef&) const = default;
};

using LiteralValue = std::variant<std::int64_t, double, std::string, bool>;

struct Literal {
    LiteralValue value;
    bool operator==(const Literal&) const = default;
};

enum class AggFn { Avg, Sum, Max, Min, Count };

struct AggCall {
    AggFn fn = AggFn::Count;
    std::optional<AttrRef> target;  // nullopt: star, only meaningful for count
    bool operator==(const AggCall&) const = default;
};

/// Row-level max/min over two operands, e.g. MAX(a.ts, b.ts). Distinct from
/// the aggregation of the same name.
enum class ScalarFnName { Max2, Min2 };

struct ScalarCall {
    ScalarFnName fn = ScalarFnName::Max2;
    std::vector<Expression> args;
    bool operator==(const ScalarCall&) const;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Compare {
    CompareOp op = CompareOp::Eq;
    Box<Expression> lhs;
    Box<Expression> rhs;
    bool operator==(const Compare&) const;
};

enum class LogicalOp { And, Or, Not };

struct Logical {
    LogicalOp op = LogicalOp::And;
    std::vector<Expression> args;
    bool operator==(const Logical&) const;
};

enum class ArithOp { Add, Sub, Mul, Div };

struct Arith {
    ArithOp op = ArithOp::Add;
    Box<Expression> lhs;
    Box<Expression> rhs;
    bool operator==(const Arith&) const;
};

struct Expression {
    std::variant<AttrRef, Literal, AggCall, ScalarCall, Compare, Logical, Arith> node;
    bool operator==(const Expression&) const = default;
};

/// Calls `fn` on every AttrRef in the tree, including aggregation targets.
void for_each_attr_ref(const Expression& expr, const std::function<void(const AttrRef&)>& fn);
bool contains_aggregate(const Expression& expr);

// ---------------------------------------------------------------------------
// Select list, group-by, output
// ---------------------------------------------------------------------------

struct SelectItem {
    std::optional<Expression> expr;  // nullopt: select *
    std::string alias;               // optional output column name
    bool operator==(const SelectItem&) const = default;

    bool is_star() const { return !expr.has_value(); }
};

struct GroupBySpec {
    std::vector<AttrRef> keys;
    bool operator==(const GroupBySpec&) const = default;
};

struct OutputSpec {
    std::string name;
    bool operator==(const OutputSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Event patterns
// ---------------------------------------------------------------------------

struct PatternNode;

enum class GuardKind { Within, WithinMax };

struct PatternGuard {
    GuardKind kind = GuardKind::Within;
    double seconds = 0.0;
    std::int64_t max_instances = 0;  // within_max only
    bool operator==(const PatternGuard&) const = default;
};

enum class RepetitionKind { Every, EveryDistinct, Range, While, Until };

struct RepetitionSpec {
    RepetitionKind kind = RepetitionKind::Every;
    std::vector<AttrRef> distinct_keys;     // every_distinct
    std::int64_t low = 0;                   // range
    std::int64_t high = 0;                  // range
    std::optional<Expression> condition;    // while
    std::optional<Box<PatternNode>> until;  // until
    bool operator==(const RepetitionSpec&) const;
};

struct EventRef {
    std::string alias;                // target alias naming the event type
    std::optional<Expression> filter;
    std::string tag;                  // optional binding name; defaults to alias
    bool operator==(const EventRef&) const = default;

    const std::string& binding() const { return tag.empty() ? alias : tag; }
};

enum class PatternOp { And, Or, Not, FollowedBy };

struct PatternComposite {
    PatternOp op = PatternOp::And;
    std::vector<PatternNode> children;
    bool operator==(const PatternComposite&) const;
};

struct PatternNode {
    std::variant<EventRef, PatternComposite> node;
    std::optional<PatternGuard> guard;
    std::optional<RepetitionSpec> repetition;
    bool operator==(const PatternNode&) const = default;

    const EventRef* as_event() const { return std::get_if<EventRef>(&node); }
    const PatternComposite* as_composite() const { return std::get_if<PatternComposite>(&node); }
};

/// Pre-order walk over the pattern tree. The callback receives each node and
/// its model path relative to `path`. Until-children are visited too.
void for_each_pattern_node(const PatternNode& root, const std::string& path,
                           const std::function<void(const PatternNode&, const std::string&)>& fn);

// ---------------------------------------------------------------------------
// Rule
// ---------------------------------------------------------------------------

struct RuleModel {
    std::string name;
    std::vector<EventType> events;
    std::vector<TargetBinding> targets;       // Target group
    std::optional<PatternNode> pattern;
    std::vector<SelectItem> bring;            // BringGroup
    std::optional<Expression> condition;      // ConditionGroup
    std::optional<GroupBySpec> group_by;      // GroupbyCondition
    std::optional<OutputSpec> output;         // EventOutput
    bool operator==(const RuleModel&) const = default;

    const EventType* find_event(std::string_view event_name) const;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool is_identifier(std::string_view text);

/// Empty rule with all four groups empty. Throws ModelError when `name` is
/// not an identifier.
RuleModel new_model(std::string_view name);

/// Alias a target is known by: its explicit alias, else its lowercased event name.
std::string effective_alias(const TargetBinding& target);

enum class ResolveStatus { Ok, UnknownAlias, UnknownAttribute, Ambiguous };

struct Resolution {
    ResolveStatus status = ResolveStatus::UnknownAlias;
    Attribute attribute;
    std::string event_name;  // event type the reference lands on
    std::string binding;     // alias or pattern tag that owns the attribute
    bool ok() const { return status == ResolveStatus::Ok; }
};

/// Resolves `alias.attr` in the rule's scope. Plain rules bind target aliases;
/// pattern rules bind the pattern's tags (or the aliases of untagged event
/// references). An empty alias searches every binding and must match exactly
/// one of them.
Resolution resolve(const RuleModel& model, std::string_view alias, std::string_view attr);

/// Deterministic normal form: implicit target aliases are made explicit and
/// integral float literals become integer literals. Idempotent. Throws
/// ModelError when two targets end up with the same alias.
RuleModel canonicalize(const RuleModel& model);

// ---------------------------------------------------------------------------
// Enum spelling shared by the text formats
// ---------------------------------------------------------------------------

std::string_view to_string(AttrKind kind);
std::string_view to_string(WindowKind kind);
std::string_view to_string(AggFn fn);
std::string_view to_string(ScalarFnName fn);
std::string_view to_string(CompareOp op);
std::string_view to_string(LogicalOp op);
std::string_view to_string(ArithOp op);
std::string_view to_string(GuardKind kind);
std::string_view to_string(RepetitionKind kind);
std::string_view to_string(PatternOp op);

/// Shortest decimal spelling that round-trips, without trailing zeros
/// ("10", "2.5", "0.001").
std::string format_number(double value);

/// EPL-style text for an expression. `ref_text` overrides how attribute
/// references print; by default they print as `alias.attr` or `attr`.
std::string expression_text(const Expression& expr,
                            const std::function<std::string(const AttrRef&)>& ref_text = {});

/// Output column name of a select item: its alias, else the expression text.
std::string column_name(const SelectItem& item);

// ---------------------------------------------------------------------------
// Builders, mainly for fixtures and tests.
// ---------------------------------------------------------------------------

namespace build {

Expression attr(std::string alias, std::string name);
Expression attr(std::string name);
Expression lit(std::int64_t value);
Expression lit(int value);
Expression lit(double value);
Expression lit(std::string value);
Expression lit(const char* value);
Expression lit(bool value);
Expression agg(AggFn fn, std::string alias, std::string name);
Expression agg(AggFn fn, std::string name);
Expression count_star();
Expression call(ScalarFnName fn, Expression a, Expression b);
Expression cmp(CompareOp op, Expression lhs, Expression rhs);
Expression arith(ArithOp op, Expression lhs, Expression rhs);
Expression all_of(std::vector<Expression> args);
Expression any_of(std::vector<Expression> args);
Expression negate(Expression arg);

SelectItem star();
SelectItem item(Expression expr, std::string alias = {});

PatternNode event(std::string alias, std::string tag = {}, std::optional<Expression> filter = std::nullopt);
PatternNode all_of(std::vector<PatternNode> children);
PatternNode any_of(std::vector<PatternNode> children);
PatternNode negate(PatternNode child);
PatternNode followed_by(std::vector<PatternNode> children);
PatternNode every(PatternNode node);
PatternNode within(PatternNode node, double seconds);
PatternNode within_max(PatternNode node, double seconds, std::int64_t max_instances);

}  // namespace build

}  // namespace cepdsl
