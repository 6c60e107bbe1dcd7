#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/validator.hpp"
#include "pattern_runtime.hpp"
#include "plan.hpp"

namespace cepdsl {

using detail::EventRecord;
using detail::Row;

TimedEvent conform(const RuleModel& model, TimedEvent event) {
    if (event.timestamp < 0)
        throw StreamError(StreamError::Kind::NegativeTimestamp,
                          "negative timestamp " + std::to_string(event.timestamp));
    const auto* schema = model.find_event(event.type_name);
    if (!schema)
        throw StreamError(StreamError::Kind::UnknownEventType, "unknown event type '" + event.type_name + "'");
    for (auto& [name, value] : event.attrs) {
        const auto* attr = schema->find(name);
        if (!attr)
            throw StreamError(StreamError::Kind::SchemaMismatch,
                              event.type_name + " has no attribute '" + name + "'");
        if (is_null(value)) continue;
        bool ok = false;
        switch (attr->kind) {
            case AttrKind::Integer:
            case AttrKind::Timestamp: ok = std::holds_alternative<std::int64_t>(value); break;
            case AttrKind::Float:
                if (const auto* i = std::get_if<std::int64_t>(&value)) value = static_cast<double>(*i);
                ok = std::holds_alternative<double>(value);
                break;
            case AttrKind::String: ok = std::holds_alternative<std::string>(value); break;
            case AttrKind::Boolean: ok = std::holds_alternative<bool>(value); break;
        }
        if (!ok)
            throw StreamError(StreamError::Kind::SchemaMismatch, event.type_name + "." + name + " expects " +
                                                                     std::string(to_string(attr->kind)) + ", got " +
                                                                     value_text(value));
    }
    return event;
}

namespace {

using Partition = std::deque<std::shared_ptr<const EventRecord>>;

struct Buffer {
    std::map<std::vector<Value>, Partition> partitions;
};

std::vector<Value> partition_key(const std::vector<std::string>& keys, const TimedEvent& e) {
    std::vector<Value> key;
    for (const auto& k : keys) {
        auto it = e.attrs.find(k);
        key.push_back(it == e.attrs.end() ? Value{} : it->second);
    }
    return key;
}

bool key_less(const Row& a, const Row& b) { return detail::row_key(a) < detail::row_key(b); }

}  // namespace

struct Session::Impl {
    RuleModel model;
    detail::Plan plan;
    std::optional<std::int64_t> last_seen;
    std::int64_t next_seq = 0;
    std::vector<Buffer> buffers;
    std::deque<EventRecord> pattern_events;
    std::unique_ptr<detail::Instance> root;

    explicit Impl(const RuleModel& m) : model(m) {
        if (auto diags = validate(model); !diags.empty()) throw InvalidModel(std::move(diags));
        check_engine_subset(model);
        plan = detail::compile_plan(model);
        buffers.resize(plan.targets.size());
        if (plan.pattern) root = detail::instantiate(*plan.pattern, plan.slots.size());
    }

    std::vector<OutputRow> push(const TimedEvent& raw) {
        TimedEvent event = conform(model, raw);
        if (last_seen && event.timestamp < *last_seen)
            throw StreamError(StreamError::Kind::OutOfOrder, "timestamp " + std::to_string(event.timestamp) +
                                                                 " precedes " + std::to_string(*last_seen));
        last_seen = event.timestamp;
        const std::int64_t seq = next_seq++;
        return plan.pattern ? push_pattern(std::move(event), seq) : push_plain(std::move(event), seq);
    }

    std::vector<OutputRow> push_pattern(TimedEvent event, std::int64_t seq) {
        pattern_events.push_back(EventRecord{seq, std::move(event)});
        const auto& rec = pattern_events.back();
        const auto now = rec.event.timestamp;
        root->advance(now);
        std::vector<detail::Match> matches;
        root->feed(rec, matches);

        std::vector<Row> rows;
        for (auto& m : matches)
            if (!plan.condition || detail::holds(*plan.condition, m.bindings)) rows.push_back(std::move(m.bindings));
        std::sort(rows.begin(), rows.end(), key_less);
        std::vector<OutputRow> out;
        for (const auto& r : rows) out.push_back(detail::project(plan, now, r));
        return out;
    }

    void evict(std::int64_t now) {
        for (std::size_t t = 0; t < buffers.size(); ++t) {
            const auto& tp = plan.targets[t];
            if (!tp.window || tp.window->kind != WindowKind::Timer) continue;
            auto& parts = buffers[t].partitions;
            for (auto it = parts.begin(); it != parts.end();) {
                auto& q = it->second;
                while (!q.empty() && now - q.front()->event.timestamp >= tp.window_ms) q.pop_front();
                it = q.empty() ? parts.erase(it) : std::next(it);
            }
        }
    }

    void insert(const std::shared_ptr<const EventRecord>& rec) {
        for (std::size_t t = 0; t < buffers.size(); ++t) {
            const auto& tp = plan.targets[t];
            if (tp.event_type != rec->event.type_name) continue;
            auto& q = buffers[t].partitions[partition_key(tp.group_win, rec->event)];
            q.push_back(rec);
            if (tp.window && tp.window->kind == WindowKind::Counter)
                while (static_cast<std::int64_t>(q.size()) > tp.window->count) q.pop_front();
        }
    }

    std::vector<const EventRecord*> contents(std::size_t t) const {
        std::vector<const EventRecord*> all;
        for (const auto& [key, q] : buffers[t].partitions)
            for (const auto& r : q) all.push_back(r.get());
        std::sort(all.begin(), all.end(), [](const auto* a, const auto* b) { return a->seq < b->seq; });
        return all;
    }

    // Rows of the join. With `fresh`, only rows whose first occurrence of the
    // new event is at `pivot` (every row containing it is produced once).
    void enumerate(const std::vector<std::vector<const EventRecord*>>& sets, std::size_t t, Row& row,
                   const EventRecord* fresh, std::size_t pivot, std::vector<Row>& out) const {
        if (t == sets.size()) {
            out.push_back(row);
            return;
        }
        if (fresh && t == pivot) {
            row[t] = fresh;
            enumerate(sets, t + 1, row, fresh, pivot, out);
            return;
        }
        for (const auto* r : sets[t]) {
            if (fresh && t < pivot && r == fresh) continue;
            row[t] = r;
            enumerate(sets, t + 1, row, fresh, pivot, out);
        }
    }

    std::vector<OutputRow> push_plain(TimedEvent event, std::int64_t seq) {
        const auto now = event.timestamp;
        auto rec = std::make_shared<const EventRecord>(EventRecord{seq, std::move(event)});
        evict(now);
        insert(rec);

        std::vector<std::vector<const EventRecord*>> sets;
        for (std::size_t t = 0; t < buffers.size(); ++t) sets.push_back(contents(t));

        std::vector<Row> fresh_rows;
        Row row(sets.size(), nullptr);
        for (std::size_t p = 0; p < sets.size(); ++p)
            if (plan.targets[p].event_type == rec->event.type_name)
                enumerate(sets, 0, row, rec.get(), p, fresh_rows);
        std::sort(fresh_rows.begin(), fresh_rows.end(), key_less);
        if (plan.condition)
            std::erase_if(fresh_rows, [&](const Row& r) { return !detail::holds(*plan.condition, r); });

        std::vector<OutputRow> out;
        if (!plan.aggregating) {
            for (const auto& r : fresh_rows) out.push_back(detail::project(plan, now, r));
            return out;
        }

        std::vector<std::vector<Value>> affected;
        std::map<std::vector<Value>, const Row*> representative;
        for (const auto& r : fresh_rows) {
            auto key = detail::group_key(plan, r);
            if (!representative.count(key)) affected.push_back(key);
            representative[key] = &r;
        }
        if (affected.empty()) return out;

        std::vector<Row> all_rows;
        enumerate(sets, 0, row, nullptr, 0, all_rows);
        std::map<std::vector<Value>, std::vector<Row>> groups;
        for (auto& r : all_rows) {
            if (plan.condition && !detail::holds(*plan.condition, r)) continue;
            auto key = detail::group_key(plan, r);
            if (representative.count(key)) groups[key].push_back(std::move(r));
        }
        for (const auto& key : affected) out.push_back(detail::project(plan, now, *representative[key], groups[key]));
        return out;
    }
};

Session::Session(const RuleModel& model) : impl_(std::make_unique<Impl>(model)) {}
Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

std::vector<OutputRow> Session::push(const TimedEvent& event) { return impl_->push(event); }
std::optional<std::int64_t> Session::last_seen_timestamp() const { return impl_->last_seen; }
const RuleModel& Session::model() const { return impl_->model; }

std::vector<BufferSnapshot> Session::buffers() const {
    std::vector<BufferSnapshot> out;
    for (std::size_t t = 0; t < impl_->buffers.size(); ++t) {
        BufferSnapshot snap{impl_->plan.slots[t].name, impl_->plan.targets[t].window, {}};
        for (const auto& [key, q] : impl_->buffers[t].partitions) {
            std::vector<TimedEvent> events;
            for (const auto& r : q) events.push_back(r->event);
            snap.partitions.push_back(std::move(events));
        }
        if (snap.partitions.empty()) snap.partitions.emplace_back();
        out.push_back(std::move(snap));
    }
    return out;
}

std::size_t Session::pattern_states() const { return impl_->root ? impl_->root->partial_count() : 0; }

Session open_session(const RuleModel& model) { return Session(model); }

std::vector<OutputRow> run_stream(const RuleModel& model, std::span<const TimedEvent> events) {
    Session s(model);
    std::vector<OutputRow> out;
    for (const auto& e : events) {
        auto rows = s.push(e);
        out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
    }
    return out;
}

bool equivalent(const std::vector<OutputRow>& a, const std::vector<OutputRow>& b, double rel_tol) {
    if (a.size() != b.size()) return false;
    auto same = [rel_tol](const Value& x, const Value& y) {
        const auto* dx = std::get_if<double>(&x);
        const auto* dy = std::get_if<double>(&y);
        if (dx && dy) {
            double scale = std::max({std::abs(*dx), std::abs(*dy), 1e-300});
            return *dx == *dy || std::abs(*dx - *dy) <= rel_tol * scale;
        }
        return x == y;
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].emitted_at != b[i].emitted_at || a[i].derived_event_name != b[i].derived_event_name) return false;
        if (a[i].values.size() != b[i].values.size()) return false;
        for (std::size_t j = 0; j < a[i].values.size(); ++j) {
            if (a[i].values[j].first != b[i].values[j].first) return false;
            if (!same(a[i].values[j].second, b[i].values[j].second)) return false;
        }
    }
    return true;
}

}  // namespace cepdsl
