// Brute-force reference interpretation. Nothing here is incremental: window
// contents are recomputed from the whole prefix for every event, and pattern
// matches are found by exhaustive recursive search from the start of the
// stream.

#include <algorithm>
#include <limits>
#include <map>

#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/validator.hpp"
#include "plan.hpp"

namespace cepdsl {

using detail::EventRecord;
using detail::PatternPlan;
using detail::Plan;
using detail::Row;

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

// ---------------------------------------------------------------------------
// Plain rules
// ---------------------------------------------------------------------------

std::vector<const EventRecord*> window_at(const detail::TargetPlan& t, std::span<const EventRecord> prefix) {
    const auto now = prefix.back().event.timestamp;
    std::vector<const EventRecord*> of_type;
    for (const auto& e : prefix)
        if (e.event.type_name == t.event_type) of_type.push_back(&e);
    if (!t.window || t.window->kind == WindowKind::KeepAll) return of_type;
    if (t.window->kind == WindowKind::Timer) {
        std::vector<const EventRecord*> kept;
        for (const auto* e : of_type)
            if (now - e->event.timestamp < t.window_ms) kept.push_back(e);
        return kept;
    }
    // counter: the most recent `count` events of each group_win partition
    std::vector<const EventRecord*> kept;
    for (std::size_t i = 0; i < of_type.size(); ++i) {
        auto same_partition = [&](const EventRecord* other) {
            for (const auto& k : t.group_win) {
                auto a = of_type[i]->event.attrs.find(k);
                auto b = other->event.attrs.find(k);
                Value va = a == of_type[i]->event.attrs.end() ? Value{} : a->second;
                Value vb = b == other->event.attrs.end() ? Value{} : b->second;
                if (!(va == vb)) return false;
            }
            return true;
        };
        auto later = std::count_if(of_type.begin() + static_cast<std::ptrdiff_t>(i) + 1, of_type.end(), same_partition);
        if (later < t.window->count) kept.push_back(of_type[i]);
    }
    return kept;
}

void product(const std::vector<std::vector<const EventRecord*>>& sets, std::size_t t, Row& row,
             std::vector<Row>& out) {
    if (t == sets.size()) {
        out.push_back(row);
        return;
    }
    for (const auto* e : sets[t]) {
        row[t] = e;
        product(sets, t + 1, row, out);
    }
}

std::vector<OutputRow> plain_step(const Plan& plan, std::span<const EventRecord> prefix) {
    const auto& newest = prefix.back();
    const auto now = newest.event.timestamp;
    std::vector<std::vector<const EventRecord*>> sets;
    for (const auto& t : plan.targets) sets.push_back(window_at(t, prefix));

    std::vector<Row> rows;
    Row row(sets.size(), nullptr);
    product(sets, 0, row, rows);
    std::erase_if(rows, [&](const Row& r) { return plan.condition && !detail::holds(*plan.condition, r); });
    auto involves_newest = [&](const Row& r) { return std::find(r.begin(), r.end(), &newest) != r.end(); };

    std::vector<OutputRow> out;
    if (!plan.aggregating) {
        for (const auto& r : rows)
            if (involves_newest(r)) out.push_back(detail::project(plan, now, r));
        return out;
    }
    std::vector<std::vector<Value>> order;
    std::map<std::vector<Value>, std::vector<Row>> groups;
    std::map<std::vector<Value>, Row> representative;
    for (const auto& r : rows) {
        auto key = detail::group_key(plan, r);
        groups[key].push_back(r);
        if (involves_newest(r)) {
            if (!representative.count(key)) order.push_back(key);
            representative[key] = r;
        }
    }
    for (const auto& key : order) out.push_back(detail::project(plan, now, representative[key], groups[key]));
    return out;
}

// ---------------------------------------------------------------------------
// Patterns
//
// Outcome of one attempt to match a node started at stream position `s`:
// the event index where it completes, or where it becomes impossible, or
// Pending when the prefix ends first. Deaths carry the phase in which they
// happen: phase 1 is the passage of time before the event is looked at,
// phase 2 is the event itself. `deadline` is an absolute timestamp at which
// the attempt dies; `span` bounds the age of its own partial matches.
// ---------------------------------------------------------------------------

struct Outcome {
    enum class Kind { Match, Dead, Pending };
    Kind kind = Kind::Pending;
    std::size_t index = 0;
    int phase = 2;
    Row bindings;
    std::int64_t first_ts = 0;
};

class Search {
public:
    Search(const Plan& plan, std::span<const EventRecord> prefix) : plan_(plan), ev_(prefix) {}

    std::vector<Outcome> all(const PatternPlan& p) { return multi(p, 0, kNever, kNever); }

private:
    std::int64_t ts(std::size_t j) const { return ev_[j].event.timestamp; }

    static Outcome dead(std::size_t j, int phase) { return Outcome{Outcome::Kind::Dead, j, phase, {}, 0}; }

    static std::int64_t plus(std::int64_t a, std::int64_t b) { return (a == kNever || b == kNever) ? kNever : a + b; }

    Outcome single(const PatternPlan& p, std::size_t s, std::int64_t deadline, std::int64_t span) {
        if (p.within_ms) span = std::min(span, *p.within_ms);
        switch (p.kind) {
            case PatternPlan::Kind::Leaf: return leaf(p, s, deadline);
            case PatternPlan::Kind::FollowedBy: return sequence(p, 0, s, deadline, span, Row(plan_.slots.size()), kNever);
            case PatternPlan::Kind::And: return conjunction(p, s, deadline, span);
            case PatternPlan::Kind::Or: return disjunction(p, s, deadline, span);
        }
        return {};
    }

    Outcome leaf(const PatternPlan& p, std::size_t s, std::int64_t deadline) {
        for (std::size_t j = s; j < ev_.size(); ++j) {
            if (ts(j) >= deadline) return dead(j, 1);
            if (p.leaf_matches(ev_[j], plan_.slots.size())) {
                Outcome o{Outcome::Kind::Match, j, 2, Row(plan_.slots.size()), ts(j)};
                o.bindings[static_cast<std::size_t>(p.slot)] = &ev_[j];
                return o;
            }
        }
        return {};
    }

    static Row merged(Row a, const Row& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (b[i]) a[i] = b[i];
        return a;
    }

    Outcome sequence(const PatternPlan& p, std::size_t i, std::size_t s, std::int64_t deadline, std::int64_t span,
                     Row bound, std::int64_t first) {
        Outcome o = i == 0 ? single(p.children[0], s, deadline, span)
                           : single(p.children[i], s, std::min(deadline, plus(first, span)), kNever);
        if (o.kind != Outcome::Kind::Match) return o;
        Row row = merged(std::move(bound), o.bindings);
        std::int64_t f = std::min(first, o.first_ts);
        if (i + 1 == p.children.size()) return Outcome{Outcome::Kind::Match, o.index, 2, std::move(row), f};
        return sequence(p, i + 1, o.index + 1, deadline, span, std::move(row), f);
    }

    Outcome conjunction(const PatternPlan& p, std::size_t s, std::int64_t deadline, std::int64_t span) {
        std::vector<Outcome> parts;
        for (const auto& c : p.children) parts.push_back(single(c, s, deadline, span));
        std::vector<std::size_t> absent_at;
        for (const auto& n : p.negated) {
            Outcome o = leaf(n, s, kNever);
            if (o.kind == Outcome::Kind::Match) absent_at.push_back(o.index);
        }
        for (std::size_t j = s; j < ev_.size(); ++j) {
            std::int64_t limit = deadline;
            for (const auto& o : parts)
                if (o.kind == Outcome::Kind::Match && o.index < j) limit = std::min(limit, plus(o.first_ts, span));
            if (ts(j) >= limit) return dead(j, 1);
            for (const auto& o : parts)
                if (o.kind == Outcome::Kind::Dead && o.index == j && o.phase == 1) return dead(j, 1);
            for (const auto& o : parts)
                if (o.kind == Outcome::Kind::Dead && o.index == j) return dead(j, 2);
            bool complete = std::all_of(parts.begin(), parts.end(), [&](const Outcome& o) {
                return o.kind == Outcome::Kind::Match && o.index <= j;
            });
            if (complete) {
                Outcome m{Outcome::Kind::Match, j, 2, Row(plan_.slots.size()), kNever};
                for (const auto& o : parts) {
                    m.bindings = merged(std::move(m.bindings), o.bindings);
                    m.first_ts = std::min(m.first_ts, o.first_ts);
                }
                return m;
            }
            if (std::find(absent_at.begin(), absent_at.end(), j) != absent_at.end()) return dead(j, 2);
        }
        return {};
    }

    Outcome disjunction(const PatternPlan& p, std::size_t s, std::int64_t deadline, std::int64_t span) {
        std::optional<Outcome> best;
        bool pending = false;
        Outcome last_death = dead(s, 1);
        for (const auto& c : p.children) {
            Outcome o = single(c, s, deadline, span);
            if (o.kind == Outcome::Kind::Match) {
                if (!best || o.index < best->index) best = std::move(o);
            } else if (o.kind == Outcome::Kind::Pending) {
                pending = true;
            } else if (std::tie(o.index, o.phase) > std::tie(last_death.index, last_death.phase)) {
                last_death = o;
            }
        }
        if (best) return *best;
        if (pending) return {};
        return last_death;
    }

    // All completions of a node that may complete more than once.
    std::vector<Outcome> multi(const PatternPlan& p, std::size_t s, std::int64_t deadline, std::int64_t span) {
        std::vector<Outcome> out;
        if (!p.multi) {
            Outcome o = single(p, s, deadline, span);
            if (o.kind == Outcome::Kind::Match) out.push_back(std::move(o));
            return out;
        }
        if (p.every) {
            PatternPlan once = p;
            once.every = false;
            once.multi = false;
            std::size_t cur = s;
            while (cur < ev_.size()) {
                Outcome o = single(once, cur, deadline, span);
                if (o.kind == Outcome::Kind::Match) {
                    cur = o.index + 1;
                    out.push_back(std::move(o));
                } else if (o.kind == Outcome::Kind::Dead) {
                    if (o.phase == 1 && ts(o.index) >= deadline) break;
                    cur = o.phase == 1 ? o.index : o.index + 1;
                } else {
                    break;
                }
            }
            return out;
        }
        if (p.within_ms) span = std::min(span, *p.within_ms);
        sequences(p, 0, s, deadline, span, Row(plan_.slots.size()), kNever, out);
        return out;
    }

    void sequences(const PatternPlan& p, std::size_t i, std::size_t s, std::int64_t deadline, std::int64_t span,
                   const Row& bound, std::int64_t first, std::vector<Outcome>& out) {
        auto found = i == 0 ? multi(p.children[0], s, deadline, span)
                            : multi(p.children[i], s, std::min(deadline, plus(first, span)), kNever);
        for (const auto& o : found) {
            Row row = merged(bound, o.bindings);
            std::int64_t f = std::min(first, o.first_ts);
            if (i + 1 == p.children.size()) out.push_back(Outcome{Outcome::Kind::Match, o.index, 2, std::move(row), f});
            else sequences(p, i + 1, o.index + 1, deadline, span, row, f, out);
        }
    }

    const Plan& plan_;
    std::span<const EventRecord> ev_;
};

std::vector<OutputRow> pattern_step(const Plan& plan, std::span<const EventRecord> prefix) {
    const auto newest = prefix.size() - 1;
    std::vector<Row> rows;
    for (auto& o : Search(plan, prefix).all(*plan.pattern))
        if (o.index == newest && (!plan.condition || detail::holds(*plan.condition, o.bindings)))
            rows.push_back(std::move(o.bindings));
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return detail::row_key(a) < detail::row_key(b); });
    std::vector<OutputRow> out;
    for (const auto& r : rows) out.push_back(detail::project(plan, prefix.back().event.timestamp, r));
    return out;
}

}  // namespace

std::vector<OutputRow> oracle(const RuleModel& model, std::span<const TimedEvent> events) {
    if (auto diags = validate(model); !diags.empty()) throw InvalidModel(std::move(diags));
    check_engine_subset(model);
    const Plan plan = detail::compile_plan(model);

    std::vector<EventRecord> stream;
    stream.reserve(events.size());
    for (const auto& e : events) {
        auto ok = conform(model, e);
        if (!stream.empty() && ok.timestamp < stream.back().event.timestamp)
            throw StreamError(StreamError::Kind::OutOfOrder, "timestamp " + std::to_string(ok.timestamp) +
                                                                 " precedes " +
                                                                 std::to_string(stream.back().event.timestamp));
        stream.push_back(EventRecord{static_cast<std::int64_t>(stream.size()), std::move(ok)});
    }

    std::vector<OutputRow> out;
    for (std::size_t n = 1; n <= stream.size(); ++n) {
        std::span<const EventRecord> prefix(stream.data(), n);
        auto rows = plan.pattern ? pattern_step(plan, prefix) : plain_step(plan, prefix);
        out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
    }
    return out;
}

}  // namespace cepdsl
