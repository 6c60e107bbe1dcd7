#pragma once

// Desk-scale interpreter for rule models.
//
// Time is logical: "now" is the timestamp of the event being pushed. Output
// follows insert-stream semantics, so rows are produced when events arrive and
// never when they leave a window.
//
// Supported subset: timer, counter and keep_all windows (a target without a
// window retains everything), group_win partitioning, joins over at most three
// targets, conditions, group-by with aggregation, and patterns built from
// filtered event references, and, or, followed-by, not (directly under and),
// every and within. Everything else is rejected by open_session with the
// offending model path.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cepdsl/model.hpp"
#include "cepdsl/value.hpp"

namespace cepdsl {

struct TimedEvent {
    std::string type_name;
    std::int64_t timestamp = 0;  // milliseconds
    std::map<std::string, Value> attrs;
    bool operator==(const TimedEvent&) const = default;
};

struct OutputRow {
    std::int64_t emitted_at = 0;
    std::vector<std::pair<std::string, Value>> values;  // select-list order
    std::optional<std::string> derived_event_name;
    bool operator==(const OutputRow&) const = default;

    const Value* find(std::string_view column) const;
};

class StreamError : public std::runtime_error {
public:
    enum class Kind { OutOfOrder, NegativeTimestamp, UnknownEventType, SchemaMismatch };

    StreamError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Checks `event` against the declared schema and coerces integer values of
/// float attributes. Missing attributes stay absent (they read as null).
/// Throws StreamError.
TimedEvent conform(const RuleModel& model, TimedEvent event);

/// Throws UnsupportedConstruct when the model falls outside the engine subset.
/// Assumes a model that validates.
void check_engine_subset(const RuleModel& model);

struct BufferSnapshot {
    std::string alias;
    std::optional<Window> window;
    std::vector<std::vector<TimedEvent>> partitions;  // one entry without group_win
};

/// Single-writer execution state for one rule.
class Session {
public:
    /// Throws InvalidModel or UnsupportedConstruct.
    explicit Session(const RuleModel& model);
    ~Session();
    Session(Session&&) noexcept;
    Session& operator=(Session&&) noexcept;

    /// Advances logical time to `event.timestamp`, evicts, inserts and
    /// returns the rows the event produces. Throws StreamError on out-of-order
    /// or non-conforming events; the session is unchanged in that case.
    std::vector<OutputRow> push(const TimedEvent& event);

    std::optional<std::int64_t> last_seen_timestamp() const;
    const RuleModel& model() const;

    /// Window contents per target, oldest first.
    std::vector<BufferSnapshot> buffers() const;
    /// Number of live partial pattern matches.
    std::size_t pattern_states() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Session open_session(const RuleModel& model);

/// Fold of push over a fresh session.
std::vector<OutputRow> run_stream(const RuleModel& model, std::span<const TimedEvent> events);

/// Brute-force reference: for every prefix of the stream, rebuilds window
/// contents from scratch (or enumerates pattern matches by exhaustive search)
/// and keeps the rows that involve the newest event.
std::vector<OutputRow> oracle(const RuleModel& model, std::span<const TimedEvent> events);

/// Row-sequence equality with floating values compared to `rel_tol`.
bool equivalent(const std::vector<OutputRow>& a, const std::vector<OutputRow>& b, double rel_tol = 1e-9);

}  // namespace cepdsl
