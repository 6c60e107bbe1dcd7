#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"

namespace cepdsl {

namespace {

enum class Parent { Root, FollowedBy, And, Or, Not };

bool has_every(const PatternNode& n) {
    bool found = false;
    for_each_pattern_node(n, "", [&](const PatternNode& x, const std::string&) { found = found || x.repetition; });
    return found;
}

bool has_every_below(const PatternNode& n) {
    const auto* c = n.as_composite();
    if (!c) return false;
    for (const auto& child : c->children)
        if (has_every(child)) return true;
    return false;
}

void check_pattern(const PatternNode& n, const std::string& path, Parent parent) {
    if (n.guard && n.guard->kind == GuardKind::WithinMax)
        throw UnsupportedConstruct(path + ".guard", "within_max guards are not executable");
    if (n.repetition) {
        if (n.repetition->kind != RepetitionKind::Every)
            throw UnsupportedConstruct(path + ".repetition",
                                       std::string(to_string(n.repetition->kind)) + " repetition is not executable");
        if (has_every_below(n))
            throw UnsupportedConstruct(path + ".repetition", "nested every is not executable");
    }
    if (has_every(n) && (parent == Parent::And || parent == Parent::Or || parent == Parent::Not))
        throw UnsupportedConstruct(path, "every is only executable at the root or inside followed_by");

    const auto* c = n.as_composite();
    if (!c) return;
    if (c->op == PatternOp::Not) {
        if (parent != Parent::And) throw UnsupportedConstruct(path, "not is only executable directly inside and");
        if (n.guard) throw UnsupportedConstruct(path + ".guard", "guards on not are not executable");
        if (n.repetition) throw UnsupportedConstruct(path + ".repetition", "repetition on not is not executable");
        const auto& child = c->children.front();
        auto child_path = path + ".children[0]";
        if (!child.as_event()) throw UnsupportedConstruct(child_path, "not must wrap a single event reference");
        if (child.guard) throw UnsupportedConstruct(child_path + ".guard", "guards under not are not executable");
        if (child.repetition)
            throw UnsupportedConstruct(child_path + ".repetition", "repetition under not is not executable");
        return;
    }
    if (c->op == PatternOp::And) {
        bool positive = false;
        for (const auto& child : c->children) {
            const auto* inner = child.as_composite();
            positive = positive || !inner || inner->op != PatternOp::Not;
        }
        if (!positive) throw UnsupportedConstruct(path, "and needs at least one child that is not a not");
    }
    Parent self = c->op == PatternOp::And ? Parent::And : c->op == PatternOp::Or ? Parent::Or : Parent::FollowedBy;
    for (std::size_t i = 0; i < c->children.size(); ++i)
        check_pattern(c->children[i], path + ".children[" + std::to_string(i) + "]", self);
}

}  // namespace

void check_engine_subset(const RuleModel& model) {
    if (!model.pattern) {
        if (model.targets.size() > 3) throw UnsupportedConstruct("targets[3]", "joins over more than three targets");
        if (model.condition && contains_aggregate(*model.condition))
            throw UnsupportedConstruct("condition", "aggregations in the condition are not executable");
        return;
    }
    for (std::size_t i = 0; i < model.targets.size(); ++i) {
        auto path = "targets[" + std::to_string(i) + "]";
        if (model.targets[i].window) throw UnsupportedConstruct(path + ".window", "windows on pattern targets");
        if (!model.targets[i].group_win.empty())
            throw UnsupportedConstruct(path + ".group_win", "group_win on pattern targets");
    }
    if (model.group_by) throw UnsupportedConstruct("group_by", "group by over pattern matches");
    for (std::size_t i = 0; i < model.bring.size(); ++i) {
        if (model.bring[i].expr && contains_aggregate(*model.bring[i].expr))
            throw UnsupportedConstruct("bring[" + std::to_string(i) + "]", "aggregations over pattern matches");
    }
    if (model.condition && contains_aggregate(*model.condition))
        throw UnsupportedConstruct("condition", "aggregations over pattern matches");
    check_pattern(*model.pattern, "pattern", Parent::Root);
}

}  // namespace cepdsl
