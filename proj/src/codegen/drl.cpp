#include <cmath>
#include <sstream>

#include "cepdsl/codegen.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/validator.hpp"

namespace cepdsl {

namespace {

// Java-flavoured constraint printer for DRL patterns.
constexpr int kOrPrec = 1;
constexpr int kAndPrec = 2;
constexpr int kComparePrec = 3;
constexpr int kAddPrec = 4;
constexpr int kMulPrec = 5;
constexpr int kUnaryPrec = 6;

std::string java_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

struct Printed {
    std::string text;
    int prec;
};

Printed constraint(const Expression& e);

std::string wrap(const Expression& e, int min_prec) {
    auto p = constraint(e);
    return p.prec < min_prec ? "(" + p.text + ")" : p.text;
}

Printed constraint(const Expression& e) {
    return std::visit(
        [](const auto& n) -> Printed {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AttrRef>) {
                return {n.attr, kUnaryPrec + 1};
            } else if constexpr (std::is_same_v<T, Literal>) {
                auto text = std::visit(
                    [](const auto& v) -> std::string {
                        using V = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<V, std::int64_t>) return std::to_string(v);
                        else if constexpr (std::is_same_v<V, double>) return format_number(v);
                        else if constexpr (std::is_same_v<V, std::string>) return java_string(v);
                        else return v ? "true" : "false";
                    },
                    n.value);
                return {text, kUnaryPrec + 1};
            } else if constexpr (std::is_same_v<T, AggCall>) {
                return {"?", kUnaryPrec + 1};  // rejected before printing
            } else if constexpr (std::is_same_v<T, ScalarCall>) {
                std::string text = n.fn == ScalarFnName::Max2 ? "Math.max(" : "Math.min(";
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) text += ", ";
                    text += constraint(n.args[i]).text;
                }
                return {text + ")", kUnaryPrec + 1};
            } else if constexpr (std::is_same_v<T, Compare>) {
                std::string op = n.op == CompareOp::Eq ? "==" : std::string(to_string(n.op));
                return {wrap(*n.lhs, kAddPrec) + " " + op + " " + wrap(*n.rhs, kAddPrec), kComparePrec};
            } else if constexpr (std::is_same_v<T, Logical>) {
                if (n.op == LogicalOp::Not) return {"!" + wrap(n.args.front(), kUnaryPrec + 1), kUnaryPrec};
                int own = n.op == LogicalOp::And ? kAndPrec : kOrPrec;
                std::string text;
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) text += n.op == LogicalOp::And ? " && " : " || ";
                    text += wrap(n.args[i], own + 1);
                }
                return {text, own};
            } else {
                int own = (n.op == ArithOp::Add || n.op == ArithOp::Sub) ? kAddPrec : kMulPrec;
                return {wrap(*n.lhs, own) + " " + std::string(to_string(n.op)) + " " + wrap(*n.rhs, own + 1), own};
            }
        },
        e.node);
}

std::string drl_duration(double seconds) {
    if (std::trunc(seconds) == seconds) return format_number(seconds) + "s";
    return std::to_string(std::llround(seconds * 1000.0)) + "ms";
}

}  // namespace

GeneratedSource generate_drl(const RuleModel& model) {
    if (auto diags = validate(model); !diags.empty()) throw InvalidModel(std::move(diags));
    if (model.pattern) throw UnsupportedConstruct("pattern", "event patterns are not supported by the DRL backend");
    if (model.targets.size() > 1) throw UnsupportedConstruct("targets[1]", "joins are not supported by the DRL backend");
    if (model.group_by) throw UnsupportedConstruct("group_by", "group by is not supported by the DRL backend");
    const auto& target = model.targets.front();
    if (!target.group_win.empty())
        throw UnsupportedConstruct("targets[0].group_win", "group_win is not supported by the DRL backend");
    if (target.window && target.window->kind == WindowKind::KeepAll)
        throw UnsupportedConstruct("targets[0].window", "keep_all windows are not supported by the DRL backend");
    for (std::size_t i = 0; i < model.bring.size(); ++i) {
        if (model.bring[i].expr && contains_aggregate(*model.bring[i].expr))
            throw UnsupportedConstruct("bring[" + std::to_string(i) + "]",
                                       "aggregations are not supported by the DRL backend");
    }
    if (model.condition && contains_aggregate(*model.condition))
        throw UnsupportedConstruct("condition", "aggregations are not supported by the DRL backend");

    std::ostringstream out;
    out << "rule " << java_string(model.name) << "\n";
    out << "when\n";
    out << "    $e : " << target.event_name << "(";
    if (model.condition) out << constraint(*model.condition).text;
    out << ")";
    if (target.window) {
        if (target.window->kind == WindowKind::Timer) out << " over window:time(" << drl_duration(target.window->seconds) << ")";
        else out << " over window:length(" << target.window->count << ")";
    }
    out << " from entry-point \"in\"\n";
    out << "then\n";
    out << "    channels[" << java_string(model.output ? model.output->name : "out") << "].send($e);\n";
    out << "end\n";

    GeneratedSource src{CodegenTarget::Drl, out.str(), {}};
    src.canonical_text = normalize_whitespace(src.text);
    return src;
}

}  // namespace cepdsl
