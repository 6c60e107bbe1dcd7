#pragma once

// Compiled form of a rule shared by the incremental engine and the
// brute-force oracle. It fixes what a row is and how expressions, aggregates
// and the select list evaluate over rows; windowing, joining and pattern
// matching are implemented separately by each side.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cepdsl/engine.hpp"
#include "cepdsl/model.hpp"

namespace cepdsl::detail {

struct EventRecord {
    std::int64_t seq = 0;  // arrival index
    TimedEvent event;
};

/// One candidate binding per slot; nullptr is unbound.
using Row = std::vector<const EventRecord*>;

struct CompiledExpr {
    enum class Op { Ref, Const, Agg, Scalar, Compare, And, Or, Not, Arith };
    Op op = Op::Const;
    int slot = -1;
    std::string attr;
    Value constant;
    AggFn agg = AggFn::Count;
    bool star = false;
    ScalarFnName scalar = ScalarFnName::Max2;
    CompareOp compare = CompareOp::Eq;
    ArithOp arith = ArithOp::Add;
    std::vector<CompiledExpr> kids;
};

/// Scalar value of `expr` on `row`. Aggregation calls fold over `group`.
Value evaluate(const CompiledExpr& expr, const Row& row, std::span<const Row> group = {});
bool truthy(const Value& v);
bool holds(const CompiledExpr& condition, const Row& row);

/// SQL-style aggregate over the non-null inputs; empty input gives null
/// (count gives 0).
Value aggregate(AggFn fn, std::span<const Value> inputs);

struct Slot {
    std::string name;        // target alias or pattern binding
    std::string event_type;
    const EventType* schema = nullptr;
    bool negated_only = false;  // bound only by a not-leaf, never carries an event
};

struct TargetPlan {
    std::string event_type;
    std::optional<Window> window;
    std::int64_t window_ms = 0;  // timer: events expire once now - ts >= window_ms
    std::vector<std::string> group_win;
};

struct PatternPlan {
    enum class Kind { Leaf, And, Or, FollowedBy };
    Kind kind = Kind::Leaf;
    // leaf
    int slot = -1;
    std::string event_type;
    std::optional<CompiledExpr> filter;
    // composites; for And, `negated` holds the not-leaves
    std::vector<PatternPlan> children;
    std::vector<PatternPlan> negated;
    std::optional<std::int64_t> within_ms;
    bool every = false;
    bool multi = false;  // an every occurs at or below this node

    bool leaf_matches(const EventRecord& e, std::size_t slot_count) const;
};

struct Column {
    std::string name;
    CompiledExpr expr;
};

struct Plan {
    std::vector<Slot> slots;
    std::vector<TargetPlan> targets;  // plain rules, parallel to slots
    std::optional<PatternPlan> pattern;
    std::vector<Column> columns;
    std::optional<CompiledExpr> condition;
    std::vector<CompiledExpr> group_keys;
    bool aggregating = false;
    std::optional<std::string> output;
};

/// Ceiling of seconds * 1000, so that `now - ts >= result` matches
/// `now - ts >= seconds * 1000` on integer timestamps.
std::int64_t duration_ms(double seconds);

/// Requires a model that validates and passes check_engine_subset.
Plan compile_plan(const RuleModel& model);

OutputRow project(const Plan& plan, std::int64_t now, const Row& representative, std::span<const Row> group = {});

std::vector<Value> group_key(const Plan& plan, const Row& row);

/// Arrival indices of the bound events, unbound slots as -1.
std::vector<std::int64_t> row_key(const Row& row);

}  // namespace cepdsl::detail
