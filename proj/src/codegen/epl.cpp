#include <algorithm>
#include <cctype>
#include <sstream>

#include "cepdsl/codegen.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/validator.hpp"

namespace cepdsl {

std::string_view to_string(CodegenTarget target) { return target == CodegenTarget::Epl ? "epl" : "drl"; }

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    std::string line;
    auto flush = [&](bool newline) {
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line;
        if (newline) out += '\n';
        line.clear();
    };
    for (char c : text) {
        if (c == '\n') {
            flush(true);
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!line.empty() && line.back() != ' ') line += ' ';
        } else {
            line += c;
        }
    }
    flush(false);
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

namespace {

// Pattern operator binding strength, loosest first.
constexpr int kFollowedBy = 0;
constexpr int kOr = 1;
constexpr int kAnd = 2;
constexpr int kNot = 3;
constexpr int kDecorated = 4;  // every, every-distinct, [n:m], guards
constexpr int kAtom = 5;

struct Fragment {
    std::string text;
    int prec = kAtom;
};

std::string paren_if(const Fragment& f, int at_most) {
    return f.prec <= at_most ? "(" + f.text + ")" : f.text;
}

bool implicit_alias(const TargetBinding& t) {
    return t.alias.empty() || t.alias == effective_alias(TargetBinding{t.event_name, {}, {}, {}});
}

class EplWriter {
public:
    explicit EplWriter(const RuleModel& m, bool in_pattern = false) : m_(m), in_pattern_(in_pattern || m.pattern) {}

    std::string ref(const AttrRef& r) const {
        if (r.alias.empty() || in_pattern_) return r.alias.empty() ? r.attr : r.alias + "." + r.attr;
        for (const auto& t : m_.targets) {
            if (effective_alias(t) == r.alias && implicit_alias(t)) return t.event_name + "." + r.attr;
        }
        return r.alias + "." + r.attr;
    }

    std::string expr(const Expression& e) const {
        return expression_text(e, [this](const AttrRef& r) { return ref(r); });
    }

    std::string filter(const Expression& e) const {
        return expression_text(e, [](const AttrRef& r) { return r.attr; });
    }

    std::string event_name_for(const std::string& alias) const {
        for (const auto& t : m_.targets)
            if (effective_alias(t) == alias) return t.event_name;
        return alias;
    }

    Fragment pattern(const PatternNode& n) const {
        Fragment f = base(n);
        if (n.guard) {
            f.text = paren_if(f, kDecorated) + " where ";
            if (n.guard->kind == GuardKind::Within) {
                f.text += "timer:within(" + format_number(n.guard->seconds) + " sec)";
            } else {
                f.text += "timer:withinmax(" + format_number(n.guard->seconds) + " sec, " +
                          std::to_string(n.guard->max_instances) + ")";
            }
            f.prec = kDecorated;
        }
        if (n.repetition) f = repeat(*n.repetition, f);
        return f;
    }

private:
    Fragment base(const PatternNode& n) const {
        if (const auto* ev = n.as_event()) {
            std::string text = ev->binding() + "=" + event_name_for(ev->alias) + "(";
            if (ev->filter) text += filter(*ev->filter);
            return {text + ")", kAtom};
        }
        const auto& c = *n.as_composite();
        if (c.op == PatternOp::Not) {
            Fragment child = c.children.empty() ? Fragment{} : pattern(c.children.front());
            return {"not " + paren_if(child, kNot), kNot};
        }
        std::string sep = c.op == PatternOp::And ? " and " : c.op == PatternOp::Or ? " or " : " -> ";
        int own = c.op == PatternOp::And ? kAnd : c.op == PatternOp::Or ? kOr : kFollowedBy;
        std::string text = "(";
        for (std::size_t i = 0; i < c.children.size(); ++i) {
            if (i) text += sep;
            text += paren_if(pattern(c.children[i]), own);
        }
        return {text + ")", kAtom};
    }

    Fragment repeat(const RepetitionSpec& r, const Fragment& inner) const {
        switch (r.kind) {
            case RepetitionKind::Every:
                return {"every " + paren_if(inner, kDecorated), kDecorated};
            case RepetitionKind::EveryDistinct: {
                std::string keys;
                for (std::size_t i = 0; i < r.distinct_keys.size(); ++i) {
                    if (i) keys += ", ";
                    keys += ref(r.distinct_keys[i]);
                }
                return {"every-distinct(" + keys + ") " + paren_if(inner, kDecorated), kDecorated};
            }
            case RepetitionKind::Range:
                return {"[" + std::to_string(r.low) + ":" + std::to_string(r.high) + "] " + paren_if(inner, kDecorated),
                        kDecorated};
            case RepetitionKind::While:
                return {paren_if(inner, kDecorated) + " while (" + (r.condition ? expr(*r.condition) : "") + ")",
                        kDecorated};
            case RepetitionKind::Until: {
                std::string tail = r.until ? paren_if(pattern(**r.until), kDecorated) : "";
                return {"(" + paren_if(inner, kDecorated) + " until " + tail + ")", kAtom};
            }
        }
        return inner;
    }

    const RuleModel& m_;
    bool in_pattern_;
};

std::string window_suffix(const TargetBinding& t) {
    std::string out;
    if (!t.group_win.empty()) {
        out += ".std:groupwin(";
        for (std::size_t i = 0; i < t.group_win.size(); ++i) {
            if (i) out += ",";
            out += t.group_win[i];
        }
        out += ")";
    }
    if (t.window) {
        switch (t.window->kind) {
            case WindowKind::Timer: out += ".win:time(" + format_number(t.window->seconds) + " sec)"; break;
            case WindowKind::Counter: out += ".win:length(" + std::to_string(t.window->count) + ")"; break;
            case WindowKind::KeepAll: out += ".win:keepall()"; break;
        }
    }
    return out;
}

void require_valid(const RuleModel& model) {
    if (auto diags = validate(model); !diags.empty()) throw InvalidModel(std::move(diags));
}

}  // namespace

std::string generate_pattern_fragment(const PatternNode& pattern, const RuleModel& model) {
    return EplWriter(model, true).pattern(pattern).text;
}

GeneratedSource generate_epl(const RuleModel& model) {
    require_valid(model);
    EplWriter w(model);
    std::ostringstream out;
    if (model.output) out << "insert into " << model.output->name << "\n";

    out << "select ";
    for (std::size_t i = 0; i < model.bring.size(); ++i) {
        const auto& item = model.bring[i];
        if (i) out << ", ";
        if (item.is_star()) {
            out << "*";
            continue;
        }
        out << w.expr(*item.expr);
        if (!item.alias.empty()) out << " as " << item.alias;
    }
    if (model.bring.empty()) out << "*";

    out << " from ";
    if (model.pattern) {
        for (std::size_t i = 0; i < model.targets.size(); ++i) {
            const auto& t = model.targets[i];
            auto path = "targets[" + std::to_string(i) + "]";
            if (t.window) throw UnsupportedConstruct(path + ".window", "windows on pattern targets are not expressible");
            if (!t.group_win.empty())
                throw UnsupportedConstruct(path + ".group_win", "group_win on pattern targets is not expressible");
        }
        out << "pattern [" << w.pattern(*model.pattern).text << "]";
    } else {
        for (std::size_t i = 0; i < model.targets.size(); ++i) {
            const auto& t = model.targets[i];
            if (i) out << ", ";
            out << t.event_name << window_suffix(t);
            if (!implicit_alias(t)) out << " as " << t.alias;
        }
    }
    if (model.condition) out << " where " << w.expr(*model.condition);
    if (model.group_by) {
        out << " group by ";
        for (std::size_t i = 0; i < model.group_by->keys.size(); ++i) {
            if (i) out << ", ";
            out << w.ref(model.group_by->keys[i]);
        }
    }

    GeneratedSource src{CodegenTarget::Epl, out.str(), {}};
    src.canonical_text = normalize_whitespace(src.text);
    return src;
}

GeneratedSource generate(const RuleModel& model, CodegenTarget target) {
    return target == CodegenTarget::Epl ? generate_epl(model) : generate_drl(model);
}

}  // namespace cepdsl
