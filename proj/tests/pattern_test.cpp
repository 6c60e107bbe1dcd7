#include <gtest/gtest.h>

#include <random>

#include "cepdsl/engine.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"
#include "support/scenarios.hpp"

namespace cepdsl {
namespace {

using namespace build;

void check_suite(const testing::PatternSuite& suite) {
    ASSERT_GE(suite.streams.size(), 10u);
    for (const auto& s : suite.streams) {
        auto engine = run_stream(suite.model, s.events);
        auto reference = oracle(suite.model, s.events);
        EXPECT_EQ(testing::matched_pairs(engine), s.matches) << suite.name << ": " << s.name;
        EXPECT_EQ(testing::matched_pairs(reference), s.matches) << suite.name << ": " << s.name << " (oracle)";
        EXPECT_TRUE(equivalent(engine, reference)) << suite.name << ": " << s.name;
    }
}

TEST(Pattern, EveryFollowedByWithin) { check_suite(testing::every_followed_by_suite()); }

TEST(Pattern, AbsenceInsideAnd) { check_suite(testing::absence_suite()); }

RuleModel ab_model(PatternNode pattern) {
    RuleModel m = new_model("AB");
    m.events = {{"A", {{"id", AttrKind::Integer}, {"v", AttrKind::Integer}}}, {"B", {{"id", AttrKind::Integer}}}};
    m.targets = {{"A", "", std::nullopt, {}}, {"B", "", std::nullopt, {}}};
    m.pattern = std::move(pattern);
    m.bring = {star()};
    return m;
}

std::vector<TimedEvent> numbered(const std::vector<std::pair<std::string, std::int64_t>>& spec) {
    std::vector<TimedEvent> out;
    for (std::size_t i = 0; i < spec.size(); ++i)
        out.push_back(testing::timed(spec[i].first, spec[i].second, {{"id", static_cast<std::int64_t>(i)}}));
    return out;
}

TEST(Pattern, SingleShotFollowedByFiresOnce) {
    auto m = ab_model(followed_by({event("a", "x"), event("b", "y")}));
    auto events = numbered({{"A", 0}, {"B", 1}, {"A", 2}, {"B", 3}});
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].emitted_at, 1);
    EXPECT_EQ(*rows[0].find("x.id"), Value{std::int64_t{0}});
    EXPECT_EQ(*rows[0].find("y.id"), Value{std::int64_t{1}});
    EXPECT_TRUE(equivalent(rows, oracle(m, events)));
}

TEST(Pattern, EveryLeafMatchesEachEvent) {
    auto m = ab_model(every(event("a")));
    auto rows = run_stream(m, numbered({{"A", 0}, {"B", 1}, {"A", 2}}));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(*rows[1].find("id"), Value{std::int64_t{2}});
}

TEST(Pattern, FilterSelectsEvents) {
    auto m = ab_model(every(event("a", "x", cmp(CompareOp::Gt, attr("v"), lit(5)))));
    std::vector<TimedEvent> events = {testing::timed("A", 0, {{"v", std::int64_t{3}}}),
                                      testing::timed("A", 1, {{"v", std::int64_t{8}}})};
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].emitted_at, 1);
}

TEST(Pattern, OrTakesTheFirstArrival) {
    auto m = ab_model(every(any_of({event("a"), event("b")})));
    auto events = numbered({{"A", 0}, {"B", 1}});
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(is_null(*rows[0].find("b.id")));
    EXPECT_EQ(*rows[1].find("b.id"), Value{std::int64_t{1}});
    EXPECT_TRUE(equivalent(rows, oracle(m, events)));
}

TEST(Pattern, AndWaitsForBothOperands) {
    auto m = ab_model(all_of({event("a"), event("b")}));
    auto events = numbered({{"B", 0}, {"B", 1}, {"A", 2}});
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(*rows[0].find("b.id"), Value{std::int64_t{0}});
    EXPECT_TRUE(equivalent(rows, oracle(m, events)));
}

TEST(Pattern, ConditionFiltersMatches) {
    auto m = ab_model(every(followed_by({event("a", "x"), event("b", "y")})));
    m.condition = cmp(CompareOp::Gt, attr("y", "id"), lit(2));
    auto events = numbered({{"A", 0}, {"B", 1}, {"A", 2}, {"B", 3}});
    auto rows = run_stream(m, events);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(*rows[0].find("x.id"), Value{std::int64_t{2}});
    EXPECT_TRUE(equivalent(rows, oracle(m, events)));
}

TEST(Pattern, PartialMatchesArePrunedAtExpiry) {
    auto m = ab_model(every(within(followed_by({event("a", "x"), event("b", "y")}), 1)));
    Session s(m);
    s.push(testing::timed("A", 0, {}));
    EXPECT_GT(s.pattern_states(), 0u);
    auto before = s.pattern_states();
    s.push(testing::timed("B", 5000, {}));
    EXPECT_LE(s.pattern_states(), before);
}

TEST(Pattern, RandomCasesAgreeWithOracle) {
    std::mt19937_64 rng(1234);
    int patterns = 0;
    for (int i = 0; i < 300 && patterns < 60; ++i) {
        auto c = testing::random_engine_case(rng);
        if (!c.model.pattern) continue;
        ++patterns;
        auto engine = run_stream(c.model, c.events);
        auto reference = oracle(c.model, c.events);
        EXPECT_TRUE(equivalent(engine, reference))
            << "case " << i << ": " << engine.size() << " vs " << reference.size() << " rows";
    }
    EXPECT_EQ(patterns, 60);
}

}  // namespace
}  // namespace cepdsl
