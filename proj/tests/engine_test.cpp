#include <gtest/gtest.h>

#include <random>

#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace cepdsl {
namespace {

using namespace build;
using testing::timed;

double as_double(const Value* v) {
    if (!v) return -1;
    if (const auto* d = std::get_if<double>(v)) return *d;
    return static_cast<double>(std::get<std::int64_t>(*v));
}

TEST(OpenSession, EmptyTimerBuffer) {
    Session s(testing::withdrawal_model());
    auto b = s.buffers();
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].window, Window::timer(10));
    EXPECT_TRUE(b[0].partitions.front().empty());
    EXPECT_FALSE(s.last_seen_timestamp());
}

TEST(OpenSession, TwoKeepAllBuffers) {
    Session s(testing::fraud_model());
    auto b = s.buffers();
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[0].alias, "fraud");
    EXPECT_EQ(b[1].alias, "withdraw");
    EXPECT_EQ(b[0].window, Window::keep_all());
}

TEST(OpenSession, RejectsRangeRepetition) {
    RuleModel m = testing::withdrawal_model();
    m.targets[0].window.reset();
    m.condition.reset();
    PatternNode p = event("withdrawal", "w");
    RepetitionSpec r;
    r.kind = RepetitionKind::Range;
    r.low = 1;
    r.high = 2;
    p.repetition = r;
    m.pattern = p;
    try {
        Session s(m);
        FAIL();
    } catch (const UnsupportedConstruct& e) {
        EXPECT_EQ(e.path(), "pattern.repetition");
    }
}

TEST(OpenSession, RejectsInvalidModels) {
    auto m = testing::withdrawal_model();
    m.targets.clear();
    EXPECT_THROW(open_session(m), InvalidModel);
}

TEST(OpenSession, SubsetPaths) {
    auto base = [] {
        RuleModel m = new_model("P");
        m.events = {{"A", {{"n", AttrKind::Integer}}}, {"B", {{"n", AttrKind::Integer}}}};
        m.targets = {{"A", "", std::nullopt, {}}, {"B", "", std::nullopt, {}}};
        m.bring = {star()};
        return m;
    };
    auto expect_path = [](const RuleModel& m, const std::string& path) {
        try {
            check_engine_subset(m);
            ADD_FAILURE() << "expected " << path;
        } catch (const UnsupportedConstruct& e) {
            EXPECT_EQ(e.path(), path);
        }
    };
    auto m = base();
    m.pattern = within_max(followed_by({event("a"), event("b")}), 5, 2);
    expect_path(m, "pattern.guard");

    m = base();
    m.pattern = followed_by({event("a"), negate(event("b"))});
    expect_path(m, "pattern.children[1]");

    m = base();
    m.pattern = all_of({every(event("a")), event("b")});
    expect_path(m, "pattern.children[0]");

    m = base();
    m.pattern = every(followed_by({every(event("a")), event("b")}));
    expect_path(m, "pattern.repetition");

    m = base();
    m.pattern = followed_by({event("a"), event("b")});
    m.targets[0].window = Window::timer(1);
    expect_path(m, "targets[0].window");

    auto plain = testing::withdrawal_model();
    plain.condition = cmp(CompareOp::Gt, agg(AggFn::Avg, "amount"), lit(1));
    expect_path(plain, "condition");
}

TEST(Push, TimerWindowFilterTrace) {
    Session s(testing::withdrawal_model());
    EXPECT_EQ(s.push(timed("Withdrawal", 0, {{"amount", 250.0}})).size(), 1u);
    EXPECT_EQ(s.push(timed("Withdrawal", 5000, {{"amount", 100.0}})).size(), 0u);
    auto rows = s.push(timed("Withdrawal", 20000, {{"amount", 300.0}}));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].emitted_at, 20000);
    EXPECT_EQ(as_double(rows[0].find("amount")), 300.0);
    auto b = s.buffers();
    ASSERT_EQ(b[0].partitions.front().size(), 1u);
    EXPECT_EQ(b[0].partitions.front()[0].timestamp, 20000);
}

TEST(Push, SlidingAverage) {
    Session s(testing::avg_model());
    auto avg_of = [](const std::vector<OutputRow>& rows) {
        EXPECT_EQ(rows.size(), 1u);
        return rows.empty() ? -1 : as_double(rows[0].find("avg(price)"));
    };
    EXPECT_DOUBLE_EQ(avg_of(s.push(timed("stockTickEvent", 0, {{"price", 10.0}}))), 10);
    EXPECT_DOUBLE_EQ(avg_of(s.push(timed("stockTickEvent", 1000, {{"price", 20.0}}))), 15);
    EXPECT_DOUBLE_EQ(avg_of(s.push(timed("stockTickEvent", 30500, {{"price", 30.0}}))), 25);
}

TEST(Push, FraudJoinEmitsOneRow) {
    Session s(testing::fraud_model());
    EXPECT_TRUE(s.push(timed("FraudWarningEvent", 100, {{"accountNumber", std::string("A")},
                                                         {"warning", std::string("stolen card")},
                                                         {"timestamp", std::int64_t{100}}}))
                    .empty());
    auto rows = s.push(timed("WithdrawalEvent", 200, {{"accountNumber", std::string("A")},
                                                      {"amount", 500.0},
                                                      {"timestamp", std::int64_t{200}}}));
    ASSERT_EQ(rows.size(), 1u);
    const auto& r = rows[0];
    ASSERT_EQ(r.values.size(), 5u);
    EXPECT_EQ(r.values[0], (std::pair<std::string, Value>{"accntNum", std::string("A")}));
    EXPECT_EQ(r.values[1].second, Value{std::string("stolen card")});
    EXPECT_EQ(r.values[2].second, Value{500.0});
    EXPECT_EQ(r.values[3], (std::pair<std::string, Value>{"timestamp", std::int64_t{200}}));
    EXPECT_EQ(r.values[4], (std::pair<std::string, Value>{"desc", std::string("withdrawlFraud")}));
    EXPECT_TRUE(s.push(timed("WithdrawalEvent", 300, {{"accountNumber", std::string("B")}, {"amount", 5.0}})).empty());
}

TEST(RunStream, KeepAllSelectStarEmitsPerInsertion) {
    std::vector<TimedEvent> events = {timed("MyEvent", 0, {{"id", std::int64_t{1}}}),
                                      timed("MyEvent", 10, {{"id", std::int64_t{2}}}),
                                      timed("MyEvent", 10, {{"id", std::int64_t{3}}})};
    auto rows = run_stream(testing::keepall_model(), events);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[2].values[0], (std::pair<std::string, Value>{"id", std::int64_t{3}}));
    EXPECT_TRUE(is_null(rows[2].values[1].second));
    EXPECT_TRUE(equivalent(rows, oracle(testing::keepall_model(), events)));
}

TEST(RunStream, EmptyStream) {
    EXPECT_TRUE(run_stream(testing::withdrawal_model(), {}).empty());
    EXPECT_TRUE(oracle(testing::withdrawal_model(), {}).empty());
}

TEST(RunStream, CountByAccount) {
    auto m = testing::withdrawal_model();
    m.targets[0].window = Window::keep_all();
    m.condition.reset();
    m.bring = {item(attr("account")), item(count_star(), "n")};
    m.group_by = GroupBySpec{{AttrRef{"", "account"}}};
    std::vector<TimedEvent> events = {timed("Withdrawal", 0, {{"account", std::string("A")}}),
                                      timed("Withdrawal", 1, {{"account", std::string("A")}}),
                                      timed("Withdrawal", 2, {{"account", std::string("B")}})};
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 3u);
    std::vector<std::int64_t> counts;
    for (const auto& r : rows) counts.push_back(std::get<std::int64_t>(*r.find("n")));
    EXPECT_EQ(counts, (std::vector<std::int64_t>{1, 2, 1}));
    EXPECT_EQ(*rows[2].find("account"), Value{std::string("B")});
    EXPECT_TRUE(equivalent(rows, oracle(m, events)));
}

TEST(RunStream, SingleEventWithoutCondition) {
    std::vector<TimedEvent> events = {timed("Withdrawal", 0, {{"amount", 1.0}})};
    auto m = testing::withdrawal_model();
    m.condition.reset();
    EXPECT_EQ(run_stream(m, events).size(), 1u);
    EXPECT_EQ(oracle(m, events).size(), 1u);
}

TEST(Aggregates, EmptyInputsGiveNullAndZeroCount) {
    auto m = testing::withdrawal_model();
    m.condition = cmp(CompareOp::Gt, attr("amount"), lit(1000));
    m.bring = {item(attr("account")), item(agg(AggFn::Avg, "amount"), "avg"), item(agg(AggFn::Sum, "amount"), "sum"),
               item(agg(AggFn::Min, "amount"), "min"), item(agg(AggFn::Max, "amount"), "max"),
               item(count_star(), "n")};
    m.condition.reset();
    m.targets[0].window = Window::timer(1);
    Session s(m);
    s.push(timed("Withdrawal", 0, {{"account", std::string("A")}}));  // amount absent
    auto rows = s.push(timed("Withdrawal", 5000, {{"account", std::string("A")}}));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(is_null(*rows[0].find("avg")));
    EXPECT_TRUE(is_null(*rows[0].find("sum")));
    EXPECT_TRUE(is_null(*rows[0].find("min")));
    EXPECT_TRUE(is_null(*rows[0].find("max")));
    EXPECT_EQ(*rows[0].find("n"), Value{std::int64_t{1}});

    auto counting = m;
    counting.bring = {item(agg(AggFn::Count, "amount"), "n")};
    Session c(counting);
    auto counted = c.push(timed("Withdrawal", 0, {{"account", std::string("A")}}));
    ASSERT_EQ(counted.size(), 1u);
    EXPECT_EQ(*counted[0].find("n"), Value{std::int64_t{0}});
}

TEST(Push, Errors) {
    Session s(testing::withdrawal_model());
    s.push(timed("Withdrawal", 1000, {{"amount", 1.0}}));
    auto kind_of = [&](const TimedEvent& e) {
        try {
            s.push(e);
        } catch (const StreamError& err) {
            return err.kind();
        }
        ADD_FAILURE() << "expected StreamError";
        return StreamError::Kind::OutOfOrder;
    };
    EXPECT_EQ(kind_of(timed("Withdrawal", 999, {})), StreamError::Kind::OutOfOrder);
    EXPECT_EQ(kind_of(timed("Deposit", 2000, {})), StreamError::Kind::UnknownEventType);
    EXPECT_EQ(kind_of(timed("Withdrawal", 2000, {{"amount", std::string("lots")}})), StreamError::Kind::SchemaMismatch);
    EXPECT_EQ(kind_of(timed("Withdrawal", 2000, {{"fee", 1.0}})), StreamError::Kind::SchemaMismatch);
    EXPECT_EQ(*s.last_seen_timestamp(), 1000);
    EXPECT_EQ(s.push(timed("Withdrawal", 1000, {{"amount", std::int64_t{300}}})).size(), 1u);
}

TEST(Conform, NegativeTimestampAndIntegerCoercion) {
    auto m = testing::withdrawal_model();
    EXPECT_THROW(conform(m, timed("Withdrawal", -1, {})), StreamError);
    auto e = conform(m, timed("Withdrawal", 0, {{"amount", std::int64_t{3}}}));
    EXPECT_EQ(e.attrs.at("amount"), Value{3.0});
}

TEST(Windows, EvictionIsHalfOpen) {
    auto m = testing::withdrawal_model();
    m.condition.reset();
    m.bring = {item(count_star(), "n")};
    Session s(m);
    s.push(timed("Withdrawal", 0, {}));
    EXPECT_EQ(*s.push(timed("Withdrawal", 9999, {}))[0].find("n"), Value{std::int64_t{2}});
    EXPECT_EQ(*s.push(timed("Withdrawal", 10000, {}))[0].find("n"), Value{std::int64_t{2}});
}

TEST(Windows, GroupwinKeepsPerKeyCounters) {
    auto m = testing::withdrawal_model();
    m.condition.reset();
    m.targets[0].window = Window::counter(2);
    m.targets[0].group_win = {"account"};
    m.bring = {item(count_star(), "n")};
    Session s(m);
    for (int i = 0; i < 5; ++i) s.push(timed("Withdrawal", i, {{"account", std::string("A")}}));
    auto rows = s.push(timed("Withdrawal", 10, {{"account", std::string("B")}}));
    EXPECT_EQ(*rows[0].find("n"), Value{std::int64_t{3}});
    auto b = s.buffers();
    ASSERT_EQ(b[0].partitions.size(), 2u);
    EXPECT_EQ(b[0].partitions[0].size(), 2u);
    EXPECT_EQ(b[0].partitions[1].size(), 1u);
}

// After every push: timer buffers hold only events younger than the window,
// counter buffers hold the most recent `count` events of their type.
TEST(Windows, SoundnessOverRandomStreams) {
    std::mt19937_64 rng(21);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        auto c = testing::random_engine_case(rng);
        if (c.model.pattern) continue;
        Session s(c.model);
        std::vector<TimedEvent> seen;
        for (const auto& e : c.events) {
            s.push(e);
            seen.push_back(conform(c.model, e));
            auto buffers = s.buffers();
            for (std::size_t t = 0; t < buffers.size(); ++t) {
                const auto& target = c.model.targets[t];
                if (!target.window) continue;
                for (const auto& part : buffers[t].partitions) {
                    if (target.window->kind == WindowKind::Timer) {
                        for (const auto& ev : part)
                            EXPECT_LT(e.timestamp - ev.timestamp, target.window->seconds * 1000.0);
                    }
                    if (target.window->kind == WindowKind::Counter) {
                        EXPECT_LE(static_cast<std::int64_t>(part.size()), target.window->count);
                        if (target.group_win.empty()) {
                            std::vector<TimedEvent> expected;
                            for (auto it = seen.rbegin(); it != seen.rend(); ++it)
                                if (it->type_name == target.event_name &&
                                    static_cast<std::int64_t>(expected.size()) < target.window->count)
                                    expected.insert(expected.begin(), *it);
                            EXPECT_EQ(part, expected);
                        }
                    }
                }
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(RunStream, MonotoneEmissionAndDeterminism) {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 30; ++i) {
        auto c = testing::random_engine_case(rng);
        auto rows = run_stream(c.model, c.events);
        for (std::size_t j = 1; j < rows.size(); ++j) EXPECT_LE(rows[j - 1].emitted_at, rows[j].emitted_at);
        EXPECT_EQ(run_stream(c.model, c.events), rows);
    }
}

TEST(RunStream, EqualsOracleOnRandomCases) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 60; ++i) {
        auto c = testing::random_engine_case(rng);
        auto engine = run_stream(c.model, c.events);
        auto reference = oracle(c.model, c.events);
        EXPECT_TRUE(equivalent(engine, reference)) << "case " << i << ": " << engine.size() << " vs "
                                                   << reference.size() << " rows";
    }
}

TEST(Equivalent, RelativeToleranceOnFloatsOnly) {
    OutputRow a{0, {{"x", 1.0}}, std::nullopt};
    OutputRow b{0, {{"x", 1.0 + 1e-12}}, std::nullopt};
    OutputRow c{0, {{"x", 1.001}}, std::nullopt};
    OutputRow d{0, {{"x", std::int64_t{1}}}, std::nullopt};
    EXPECT_TRUE(equivalent({a}, {b}));
    EXPECT_FALSE(equivalent({a}, {c}));
    EXPECT_FALSE(equivalent({a}, {d}));
    EXPECT_FALSE(equivalent({a}, {}));
}

}  // namespace
}  // namespace cepdsl
