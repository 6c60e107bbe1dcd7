#include "pattern_runtime.hpp"

#include <algorithm>

namespace cepdsl::detail {

namespace {

std::unique_ptr<Instance> instantiate_once(const PatternPlan& plan, std::size_t slots);

Match merge(const Match& a, const Match& b) {
    Match m{a.bindings, std::min(a.first_ts, b.first_ts)};
    for (std::size_t i = 0; i < m.bindings.size(); ++i)
        if (b.bindings[i]) m.bindings[i] = b.bindings[i];
    return m;
}

class LeafInstance : public Instance {
public:
    LeafInstance(const PatternPlan& p, std::size_t slots) : p_(p), slots_(slots) {}

    void advance(std::int64_t) override {}
    void prune(std::int64_t) override {}
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        if (!active() || !p_.leaf_matches(e, slots_)) return;
        Match m{Row(slots_, nullptr), e.event.timestamp};
        m.bindings[static_cast<std::size_t>(p_.slot)] = &e;
        out.push_back(std::move(m));
        state_ = State::Done;
    }
    std::size_t partial_count() const override { return 0; }

private:
    const PatternPlan& p_;
    std::size_t slots_;
};

class GuardInstance : public Instance {
public:
    GuardInstance(std::unique_ptr<Instance> child, std::int64_t ms) : child_(std::move(child)), ms_(ms) {}

    void advance(std::int64_t now) override {
        if (!active()) return;
        child_->advance(now);
        child_->prune(now - ms_);
        sync();
    }
    void prune(std::int64_t cutoff) override {
        if (!active()) return;
        child_->prune(cutoff);
        sync();
    }
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        if (!active()) return;
        std::vector<Match> got;
        child_->feed(e, got);
        for (auto& m : got)
            if (e.event.timestamp - m.first_ts < ms_) out.push_back(std::move(m));
        sync();
    }
    std::size_t partial_count() const override { return active() ? child_->partial_count() : 0; }

private:
    void sync() { state_ = child_->state(); }

    std::unique_ptr<Instance> child_;
    std::int64_t ms_;
};

class EveryInstance : public Instance {
public:
    EveryInstance(const PatternPlan& p, std::size_t slots) : p_(p), slots_(slots), current_(fresh()) {}

    void advance(std::int64_t now) override {
        current_->advance(now);
        if (!current_->active()) current_ = fresh();
    }
    void prune(std::int64_t cutoff) override {
        current_->prune(cutoff);
        if (!current_->active()) current_ = fresh();
    }
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        current_->feed(e, out);
        if (!current_->active()) current_ = fresh();
    }
    std::size_t partial_count() const override { return current_->partial_count(); }

private:
    std::unique_ptr<Instance> fresh() const { return instantiate_once(p_, slots_); }

    const PatternPlan& p_;
    std::size_t slots_;
    std::unique_ptr<Instance> current_;
};

class FollowedByInstance : public Instance {
public:
    FollowedByInstance(const PatternPlan& p, std::size_t slots)
        : p_(p), slots_(slots), head_(instantiate(p.children.front(), slots)) {}

    void advance(std::int64_t now) override {
        if (!active()) return;
        if (head_) head_->advance(now);
        for (auto& r : runs_) r.inst->advance(now);
        tidy();
    }
    void prune(std::int64_t cutoff) override {
        if (!active()) return;
        if (head_) head_->prune(cutoff);
        std::erase_if(runs_, [&](const Run& r) { return r.first_ts <= cutoff; });
        for (auto& r : runs_) r.inst->prune(cutoff);
        tidy();
    }
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        if (!active()) return;
        const std::size_t existing = runs_.size();
        for (std::size_t i = 0; i < existing; ++i) {
            std::vector<Match> got;
            runs_[i].inst->feed(e, got);
            for (const auto& m : got) {
                Match merged = merge(Match{runs_[i].bindings, runs_[i].first_ts}, m);
                if (runs_[i].next + 1 == p_.children.size()) emit(std::move(merged), out);
                else spawn(std::move(merged), runs_[i].next + 1);
                if (!active()) return;
            }
        }
        if (head_) {
            std::vector<Match> got;
            head_->feed(e, got);
            for (auto& m : got) spawn(std::move(m), 1);
        }
        tidy();
    }
    std::size_t partial_count() const override {
        if (!active()) return 0;
        std::size_t n = head_ ? head_->partial_count() : 0;
        for (const auto& r : runs_) n += 1 + r.inst->partial_count();
        return n;
    }

private:
    struct Run {
        Row bindings;
        std::int64_t first_ts;
        std::size_t next;  // index of the child this run waits for
        std::unique_ptr<Instance> inst;
    };

    void spawn(Match m, std::size_t next) {
        runs_.push_back(Run{std::move(m.bindings), m.first_ts, next, instantiate(p_.children[next], slots_)});
    }

    void emit(Match m, std::vector<Match>& out) {
        out.push_back(std::move(m));
        if (!p_.multi) {
            state_ = State::Done;
            runs_.clear();
            head_.reset();
        }
    }

    void tidy() {
        if (!active()) return;
        std::erase_if(runs_, [](const Run& r) { return !r.inst->active(); });
        if (head_ && !head_->active()) head_.reset();
        if (!head_ && runs_.empty()) state_ = State::Dead;
    }

    const PatternPlan& p_;
    std::size_t slots_;
    std::unique_ptr<Instance> head_;
    std::vector<Run> runs_;
};

class AndInstance : public Instance {
public:
    AndInstance(const PatternPlan& p, std::size_t slots) : slots_(slots) {
        for (const auto& c : p.children) parts_.push_back(Part{instantiate(c, slots), std::nullopt});
        for (const auto& n : p.negated) absent_.push_back(instantiate(n, slots));
    }

    void advance(std::int64_t now) override {
        if (!active()) return;
        for (auto& part : parts_) {
            if (part.match) continue;
            part.inst->advance(now);
            if (part.inst->state() == State::Dead) {
                state_ = State::Dead;
                return;
            }
        }
    }
    void prune(std::int64_t cutoff) override {
        if (!active()) return;
        for (auto& part : parts_) {
            if (part.match) {
                if (part.match->first_ts <= cutoff) {
                    state_ = State::Dead;
                    return;
                }
                continue;
            }
            part.inst->prune(cutoff);
            if (part.inst->state() == State::Dead) {
                state_ = State::Dead;
                return;
            }
        }
    }
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        if (!active()) return;
        for (auto& part : parts_) {
            if (part.match) continue;
            std::vector<Match> got;
            part.inst->feed(e, got);
            if (!got.empty()) part.match = std::move(got.front());
            else if (part.inst->state() == State::Dead) {
                state_ = State::Dead;
                return;
            }
        }
        if (std::all_of(parts_.begin(), parts_.end(), [](const Part& p) { return p.match.has_value(); })) {
            Match m = *parts_.front().match;
            for (std::size_t i = 1; i < parts_.size(); ++i) m = merge(m, *parts_[i].match);
            out.push_back(std::move(m));
            state_ = State::Done;
            return;
        }
        for (auto& a : absent_) {
            std::vector<Match> got;
            a->feed(e, got);
            if (!got.empty()) {
                state_ = State::Dead;
                return;
            }
        }
    }
    std::size_t partial_count() const override {
        if (!active()) return 0;
        std::size_t n = 0;
        for (const auto& part : parts_) n += part.match ? 1 : part.inst->partial_count();
        return n;
    }

private:
    struct Part {
        std::unique_ptr<Instance> inst;
        std::optional<Match> match;
    };

    std::size_t slots_;
    std::vector<Part> parts_;
    std::vector<std::unique_ptr<Instance>> absent_;
};

class OrInstance : public Instance {
public:
    OrInstance(const PatternPlan& p, std::size_t slots) {
        for (const auto& c : p.children) branches_.push_back(instantiate(c, slots));
    }

    void advance(std::int64_t now) override {
        if (!active()) return;
        for (auto& b : branches_) b->advance(now);
        tidy();
    }
    void prune(std::int64_t cutoff) override {
        if (!active()) return;
        for (auto& b : branches_) b->prune(cutoff);
        tidy();
    }
    void feed(const EventRecord& e, std::vector<Match>& out) override {
        if (!active()) return;
        for (auto& b : branches_) {
            std::vector<Match> got;
            b->feed(e, got);
            if (!got.empty()) {
                out.push_back(std::move(got.front()));
                state_ = State::Done;
                return;
            }
        }
        tidy();
    }
    std::size_t partial_count() const override {
        if (!active()) return 0;
        std::size_t n = 0;
        for (const auto& b : branches_) n += b->partial_count();
        return n;
    }

private:
    void tidy() {
        std::erase_if(branches_, [](const auto& b) { return !b->active(); });
        if (branches_.empty()) state_ = State::Dead;
    }

    std::vector<std::unique_ptr<Instance>> branches_;
};

// The node without its every, guard included.
std::unique_ptr<Instance> instantiate_once(const PatternPlan& plan, std::size_t slots) {
    std::unique_ptr<Instance> base;
    switch (plan.kind) {
        case PatternPlan::Kind::Leaf: base = std::make_unique<LeafInstance>(plan, slots); break;
        case PatternPlan::Kind::And: base = std::make_unique<AndInstance>(plan, slots); break;
        case PatternPlan::Kind::Or: base = std::make_unique<OrInstance>(plan, slots); break;
        case PatternPlan::Kind::FollowedBy: base = std::make_unique<FollowedByInstance>(plan, slots); break;
    }
    if (plan.within_ms) base = std::make_unique<GuardInstance>(std::move(base), *plan.within_ms);
    return base;
}

}  // namespace

std::unique_ptr<Instance> instantiate(const PatternPlan& plan, std::size_t slot_count) {
    if (plan.every) return std::make_unique<EveryInstance>(plan, slot_count);
    return instantiate_once(plan, slot_count);
}

}  // namespace cepdsl::detail
