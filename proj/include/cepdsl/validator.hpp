#pragma once

// Constraint pass over a RuleModel. Validation is an analysis: it never
// throws, and every finding comes back as a coded Diagnostic.
//
// Rule set (all errors):
//   V001  the rule has at least one target
//   V002  names are identifiers and unique: rule, events, attributes within
//         an event, target aliases, output event
//   V003  every target references a declared event type
//   V004  every reference resolves (attributes, aliases, pattern aliases,
//         group keys, group_win keys)
//   V005  avg/sum/min/max apply to numeric or timestamp attributes only
//   V006  window parameters are positive (timer seconds, counter count)
//   V007  pattern arity: not is unary, and/or/followed_by have two or more
//         children; pattern tags are unique
//   V008  pattern guard durations (and within_max instance caps) are positive
//   V009  with a group-by, every attribute a select item reads outside an
//         aggregation is a group key
//   V010  operand kinds are compatible (comparisons, arithmetic, logical
//         operators, scalar functions, boolean-valued conditions)
//   V011  repetition parameters are well formed (range low <= high, ...)
//   V012  output column names are unique

#include <optional>
#include <string>
#include <vector>

#include "cepdsl/model.hpp"

namespace cepdsl {

enum class Severity { Error, Warning };

struct Diagnostic {
    std::string code;   // "V001".."V012"
    Severity severity = Severity::Error;
    std::string path;   // e.g. "targets[0].window"
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

std::string_view to_string(Severity severity);

/// "V001 error targets: rule has no target" style one-liner.
std::string format_diagnostic(const Diagnostic& d);

/// Empty iff the model satisfies V001..V012. Ordered by path, then code.
std::vector<Diagnostic> validate(const RuleModel& model);

enum class ValueKind { Numeric, String, Boolean, Timestamp };

std::string_view to_string(ValueKind kind);
ValueKind value_kind(AttrKind kind);

struct TypeResult {
    std::optional<ValueKind> kind;  // set iff diagnostics is empty
    std::vector<Diagnostic> diagnostics;
};

/// Result kind of `expr` in the scope of `scope`, or the V004/V010 findings
/// that prevent typing it. `path` prefixes diagnostic paths.
TypeResult typecheck(const Expression& expr, const RuleModel& scope,
                     const std::string& path = "condition");

}  // namespace cepdsl
