#pragma once

// Incremental pattern matcher. Each pattern node becomes an instance that is
// stepped once per event in two phases: advance() applies the passage of time
// (guards expire partial matches whose first event is too old), then feed()
// offers the event itself. An instance is Active until it completes (Done) or
// can no longer complete (Dead); every-nodes restart their child and stay
// Active forever.

#include <cstdint>
#include <memory>
#include <vector>

#include "plan.hpp"

namespace cepdsl::detail {

struct Match {
    Row bindings;
    std::int64_t first_ts = 0;  // timestamp of the earliest bound event
};

class Instance {
public:
    enum class State { Active, Done, Dead };

    virtual ~Instance() = default;
    virtual void advance(std::int64_t now) = 0;
    /// Kills partial matches whose first event is at or before `cutoff`.
    virtual void prune(std::int64_t cutoff) = 0;
    virtual void feed(const EventRecord& e, std::vector<Match>& out) = 0;
    virtual std::size_t partial_count() const = 0;

    State state() const { return state_; }
    bool active() const { return state_ == State::Active; }

protected:
    State state_ = State::Active;
};

std::unique_ptr<Instance> instantiate(const PatternPlan& plan, std::size_t slot_count);

}  // namespace cepdsl::detail
