#include "fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cepdsl::testing {

using namespace cepdsl::build;

RuleModel keepall_model() {
    RuleModel m = new_model("AllMyEvents");
    m.events.push_back({"MyEvent", {{"id", AttrKind::Integer}, {"value", AttrKind::Float}}});
    m.targets.push_back({"MyEvent", "", Window::keep_all(), {}});
    m.bring.push_back(star());
    return m;
}

RuleModel fraud_model() {
    RuleModel m = new_model("WithdrawalFraud");
    m.events.push_back({"FraudWarningEvent",
                        {{"accountNumber", AttrKind::String},
                         {"warning", AttrKind::String},
                         {"timestamp", AttrKind::Timestamp}}});
    m.events.push_back({"WithdrawalEvent",
                        {{"accountNumber", AttrKind::String},
                         {"amount", AttrKind::Float},
                         {"timestamp", AttrKind::Timestamp}}});
    m.targets.push_back({"FraudWarningEvent", "fraud", Window::keep_all(), {}});
    m.targets.push_back({"WithdrawalEvent", "withdraw", Window::keep_all(), {}});
    m.bring.push_back(item(attr("fraud", "accountNumber"), "accntNum"));
    m.bring.push_back(item(attr("fraud", "warning"), "warn"));
    m.bring.push_back(item(attr("withdraw", "amount"), "amount"));
    m.bring.push_back(
        item(call(ScalarFnName::Max2, attr("fraud", "timestamp"), attr("withdraw", "timestamp")), "timestamp"));
    m.bring.push_back(item(lit("withdrawlFraud"), "desc"));
    m.condition = cmp(CompareOp::Eq, attr("fraud", "accountNumber"), attr("withdraw", "accountNumber"));
    return m;
}

RuleModel withdrawal_model() {
    RuleModel m = new_model("LargeWithdrawal");
    m.events.push_back({"Withdrawal", {{"account", AttrKind::String}, {"amount", AttrKind::Float}}});
    m.targets.push_back({"Withdrawal", "", Window::timer(10), {}});
    m.bring.push_back(star());
    m.condition = cmp(CompareOp::Ge, attr("amount"), lit(200));
    return m;
}

RuleModel avg_model() {
    RuleModel m = new_model("AveragePrice");
    m.events.push_back({"stockTickEvent", {{"symbol", AttrKind::String}, {"price", AttrKind::Float}}});
    m.targets.push_back({"stockTickEvent", "", Window::timer(30), {}});
    m.bring.push_back(item(agg(AggFn::Avg, "price")));
    return m;
}

std::vector<Golden> golden_queries() {
    return {
        {"keepall", keepall_model(), "select * from MyEvent.win:keepall()"},
        {"fraud", fraud_model(),
         "select fraud.accountNumber as accntNum, fraud.warning as warn, withdraw.amount as amount, "
         "MAX(fraud.timestamp, withdraw.timestamp) as timestamp, 'withdrawlFraud' as desc from "
         "FraudWarningEvent. win:keepall() as fraud, WithdrawalEvent. win:keepall() as withdraw where "
         "fraud.accountNumber = withdraw.accountNumber"},
        {"withdrawal", withdrawal_model(), "select * from Withdrawal.win:time(10 sec ) where amount >= 200"},
        {"avg", avg_model(), "select avg(price) from stockTickEvent.win:time(30 sec)"},
    };
}

std::vector<std::string> epl_tokens(std::string_view text) {
    static const std::set<std::string> keywords = {
        "select", "from", "where", "as", "group", "by", "insert", "into", "and", "or", "not", "every",
        "pattern", "sec", "max", "min", "avg", "sum", "count", "win", "std", "time", "length", "keepall",
        "groupwin", "timer", "within", "withinmax", "until", "while", "true", "false"};
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
        } else if (std::isalpha(c) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            std::string word(text.substr(i, j - i));
            std::string lower = word;
            std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
            out.push_back(keywords.count(lower) ? lower : word);
            i = j;
        } else if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else if (c == '\'' || c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != text[i]) j += text[j] == '\\' ? 2 : 1;
            j = std::min(j + 1, text.size());
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            std::size_t len = 1;
            for (std::string_view op : {">=", "<=", "!=", "->", "<>"})
                if (text.substr(i, 2) == op) len = 2;
            out.emplace_back(text.substr(i, len));
            i += len;
        }
    }
    return out;
}

TimedEvent timed(std::string type, std::int64_t ts, std::map<std::string, Value> attrs) {
    return TimedEvent{std::move(type), ts, std::move(attrs)};
}

std::string fixture_path(const std::string& name) { return std::string(CEPDSL_FIXTURE_DIR) + "/" + name; }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace cepdsl::testing
