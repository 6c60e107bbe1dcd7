#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cepdsl/engine.hpp"
#include "cepdsl/model.hpp"

namespace cepdsl::testing {

// Rules reproducing the four reference queries.
RuleModel keepall_model();     // select * from MyEvent.win:keepall()
RuleModel fraud_model();       // fraud/withdraw join
RuleModel withdrawal_model();  // 10 s Withdrawal filter
RuleModel avg_model();         // 30 s average price

struct Golden {
    std::string name;
    RuleModel model;
    std::string query;  // reference text, original spacing and casing
};

std::vector<Golden> golden_queries();

/// Lexical tokens of an EPL text. Keywords and built-in function names are
/// lowercased; identifiers and string literals are kept verbatim.
std::vector<std::string> epl_tokens(std::string_view text);

TimedEvent timed(std::string type, std::int64_t ts, std::map<std::string, Value> attrs = {});

/// Locates the fixture directory shipped with the tests.
std::string fixture_path(const std::string& name);
std::string read_text(const std::string& path);

}  // namespace cepdsl::testing
