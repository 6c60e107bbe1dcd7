#pragma once

// Model-to-text transformation. Esper EPL is the primary target; a Drools
// Fusion DRL subset covers single-stream filter rules.

#include <string>

#include "cepdsl/model.hpp"

namespace cepdsl {

enum class CodegenTarget { Epl, Drl };

std::string_view to_string(CodegenTarget target);

struct GeneratedSource {
    CodegenTarget target = CodegenTarget::Epl;
    std::string text;
    std::string canonical_text;  // normalize_whitespace(text)
    bool operator==(const GeneratedSource&) const = default;
};

/// Collapses whitespace runs to one space and trims every line.
std::string normalize_whitespace(std::string_view text);

/// Throws InvalidModel when validate(model) is non-empty, UnsupportedConstruct
/// for target windows on a pattern rule.
GeneratedSource generate_epl(const RuleModel& model);

/// Pattern expression text, parenthesized wherever a child binds no tighter
/// than its parent. `model` supplies event type names for the references.
std::string generate_pattern_fragment(const PatternNode& pattern, const RuleModel& model);

/// One DRL rule. The subset is a single target with an optional timer or
/// counter window, a condition, and a select list without aggregation or
/// grouping. Anything else throws UnsupportedConstruct naming the model path.
GeneratedSource generate_drl(const RuleModel& model);

GeneratedSource generate(const RuleModel& model, CodegenTarget target);

}  // namespace cepdsl
