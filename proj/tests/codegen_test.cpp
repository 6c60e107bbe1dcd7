#include <gtest/gtest.h>

#include <random>

#include "cepdsl/codegen.hpp"
#include "cepdsl/errors.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace cepdsl {
namespace {

using namespace build;

TEST(Epl, GoldenQueriesMatchTokenForToken) {
    for (const auto& g : testing::golden_queries()) {
        auto src = generate_epl(g.model);
        EXPECT_EQ(testing::epl_tokens(src.canonical_text), testing::epl_tokens(g.query)) << g.name << "\n"
                                                                                         << src.text;
    }
}

TEST(Epl, ExactTextOfTheSimpleQueries) {
    EXPECT_EQ(generate_epl(testing::keepall_model()).text, "select * from MyEvent.win:keepall()");
    EXPECT_EQ(generate_epl(testing::withdrawal_model()).text,
              "select * from Withdrawal.win:time(10 sec) where amount >= 200");
    EXPECT_EQ(generate_epl(testing::avg_model()).text, "select avg(price) from stockTickEvent.win:time(30 sec)");
}

TEST(Epl, JoinQueryText) {
    EXPECT_EQ(generate_epl(testing::fraud_model()).text,
              "select fraud.accountNumber as accntNum, fraud.warning as warn, withdraw.amount as amount, "
              "max(fraud.timestamp, withdraw.timestamp) as timestamp, 'withdrawlFraud' as desc from "
              "FraudWarningEvent.win:keepall() as fraud, WithdrawalEvent.win:keepall() as withdraw where "
              "fraud.accountNumber = withdraw.accountNumber");
}

TEST(Epl, CanonicalTextIsNormalized) {
    auto src = generate_epl(testing::withdrawal_model());
    EXPECT_EQ(src.canonical_text, normalize_whitespace(src.text));
    EXPECT_EQ(normalize_whitespace("  a\t\tb  \n\n c  "), "a b\n\nc");
}

TEST(Epl, WindowsGroupwinGroupByAndOutput) {
    auto m = testing::withdrawal_model();
    m.targets[0].window = Window::counter(5);
    m.targets[0].group_win = {"account"};
    m.condition.reset();
    m.bring = {item(attr("account")), item(agg(AggFn::Sum, "amount"), "total")};
    m.group_by = GroupBySpec{{AttrRef{"", "account"}}};
    m.output = OutputSpec{"Totals"};
    EXPECT_EQ(generate_epl(m).text,
              "insert into Totals\n"
              "select account, sum(amount) as total from Withdrawal.std:groupwin(account).win:length(5) "
              "group by account");
}

TEST(Epl, BareStreamWithoutWindow) {
    auto m = testing::withdrawal_model();
    m.targets[0].window.reset();
    m.targets[0].alias = "w";
    m.condition = cmp(CompareOp::Gt, attr("w", "amount"), lit(2.5));
    EXPECT_EQ(generate_epl(m).text, "select * from Withdrawal as w where w.amount > 2.5");
}

TEST(Epl, RejectsInvalidModels) {
    auto m = testing::withdrawal_model();
    m.targets.clear();
    EXPECT_THROW(generate_epl(m), InvalidModel);
}

RuleModel ab_model() {
    RuleModel m = new_model("AB");
    m.events = {{"A", {{"id", AttrKind::Integer}}}, {"B", {{"id", AttrKind::Integer}}}, {"C", {{"id", AttrKind::Integer}}}};
    m.targets = {{"A", "", std::nullopt, {}}, {"B", "", std::nullopt, {}}, {"C", "", std::nullopt, {}}};
    m.bring = {star()};
    return m;
}

TEST(PatternFragment, GuardedFollowedBy) {
    auto m = ab_model();
    auto p = within(followed_by({event("a"), event("b")}), 10);
    EXPECT_EQ(generate_pattern_fragment(p, m), "(a=A() -> b=B()) where timer:within(10 sec)");
}

TEST(PatternFragment, EveryLeaf) {
    EXPECT_EQ(generate_pattern_fragment(every(event("a")), ab_model()), "every a=A()");
}

TEST(PatternFragment, NotInsideAnd) {
    EXPECT_EQ(generate_pattern_fragment(all_of({event("b"), negate(event("c"))}), ab_model()), "(b=B() and not c=C())");
}

TEST(PatternFragment, Decorations) {
    auto m = ab_model();
    auto tagged = event("a", "x", cmp(CompareOp::Gt, attr("id"), lit(3)));
    EXPECT_EQ(generate_pattern_fragment(every(within(tagged, 2)), m), "every (x=A(id > 3) where timer:within(2 sec))");
    EXPECT_EQ(generate_pattern_fragment(within_max(event("a"), 5, 3), m), "a=A() where timer:withinmax(5 sec, 3)");

    PatternNode ranged = event("a");
    RepetitionSpec r;
    r.kind = RepetitionKind::Range;
    r.low = 1;
    r.high = 3;
    ranged.repetition = r;
    EXPECT_EQ(generate_pattern_fragment(ranged, m), "[1:3] a=A()");

    PatternNode distinct = event("a");
    RepetitionSpec d;
    d.kind = RepetitionKind::EveryDistinct;
    d.distinct_keys = {AttrRef{"a", "id"}};
    distinct.repetition = d;
    EXPECT_EQ(generate_pattern_fragment(distinct, m), "every-distinct(a.id) a=A()");

    PatternNode until = event("a");
    RepetitionSpec u;
    u.kind = RepetitionKind::Until;
    u.until = Box<PatternNode>(event("b"));
    until.repetition = u;
    EXPECT_EQ(generate_pattern_fragment(until, m), "(a=A() until b=B())");
}

TEST(Epl, PatternRule) {
    auto m = ab_model();
    m.pattern = every(followed_by({event("a", "x"), event("b", "y")}));
    m.bring = {item(attr("x", "id"), "first"), item(attr("y", "id"), "second")};
    EXPECT_EQ(generate_epl(m).text, "select x.id as first, y.id as second from pattern [every (x=A() -> y=B())]");
}

TEST(Epl, PatternTargetsCannotCarryWindows) {
    auto m = ab_model();
    m.pattern = followed_by({event("a"), event("b")});
    m.targets[1].window = Window::timer(5);
    try {
        generate_epl(m);
        FAIL() << "expected UnsupportedConstruct";
    } catch (const UnsupportedConstruct& e) {
        EXPECT_EQ(e.path(), "targets[1].window");
    }
}

TEST(Epl, DeterministicAcrossRuns) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto m = canonicalize(testing::random_model(rng));
        auto first = generate_epl(m).text;
        for (int run = 0; run < 4; ++run) EXPECT_EQ(generate_epl(m).text, first);
    }
}

TEST(Drl, TimerWindowFilter) {
    auto src = generate_drl(testing::withdrawal_model());
    EXPECT_NE(src.text.find("Withdrawal(amount >= 200) over window:time(10s)"), std::string::npos) << src.text;
    EXPECT_EQ(src.text,
              "rule \"LargeWithdrawal\"\n"
              "when\n"
              "    $e : Withdrawal(amount >= 200) over window:time(10s) from entry-point \"in\"\n"
              "then\n"
              "    channels[\"out\"].send($e);\n"
              "end\n");
}

TEST(Drl, CounterWindow) {
    auto m = testing::withdrawal_model();
    m.targets[0].window = Window::counter(5);
    EXPECT_NE(generate_drl(m).text.find("over window:length(5)"), std::string::npos);
}

TEST(Drl, ConstraintSpelling) {
    auto m = testing::withdrawal_model();
    m.condition = all_of({cmp(CompareOp::Eq, attr("account"), lit("x\"y")), negate(cmp(CompareOp::Lt, attr("amount"), lit(1.5)))});
    EXPECT_NE(generate_drl(m).text.find("Withdrawal(account == \"x\\\"y\" && !(amount < 1.5))"), std::string::npos)
        << generate_drl(m).text;
}

TEST(Drl, SubsetViolationsNameTheirPath) {
    auto expect_path = [](const RuleModel& m, const std::string& path) {
        try {
            generate_drl(m);
            ADD_FAILURE() << "expected UnsupportedConstruct at " << path;
        } catch (const UnsupportedConstruct& e) {
            EXPECT_EQ(e.path(), path);
        }
    };
    expect_path(testing::fraud_model(), "targets[1]");
    expect_path(testing::keepall_model(), "targets[0].window");
    expect_path(testing::avg_model(), "bring[0]");

    auto grouped = testing::withdrawal_model();
    grouped.bring = {item(attr("account"))};
    grouped.group_by = GroupBySpec{{AttrRef{"", "account"}}};
    expect_path(grouped, "group_by");

    auto patterned = ab_model();
    patterned.pattern = followed_by({event("a"), event("b")});
    expect_path(patterned, "pattern");
}

TEST(Generate, DispatchesOnTarget) {
    auto m = testing::withdrawal_model();
    EXPECT_EQ(generate(m, CodegenTarget::Epl), generate_epl(m));
    EXPECT_EQ(generate(m, CodegenTarget::Drl), generate_drl(m));
}

}  // namespace
}  // namespace cepdsl
