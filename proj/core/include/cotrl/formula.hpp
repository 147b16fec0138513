#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotrl/rational.hpp"

namespace cotrl {

/// Token list over number strings ("1".."13"), "+", "-", "*", "/", "(", ")".
using Formula = std::vector<std::string>;

bool is_number_token(std::string_view token);
bool is_operator_token(std::string_view token);

/// Exact evaluation with the usual precedence and left associativity.
/// Returns nullopt for syntax errors, unbalanced parentheses, dangling
/// operators, division by zero, or int64 overflow.
std::optional<Rational> eval_formula(std::span<const std::string> tokens);

/// "5+7" style rendering used in prompts and thoughts.
std::string formula_compact(std::span<const std::string> tokens);
/// "5 + 7" style rendering used for serialization.
std::string formula_spaced(std::span<const std::string> tokens);

/// Splits either rendering back into tokens; nullopt on unknown characters.
std::optional<Formula> parse_formula(std::string_view text);

}  // namespace cotrl
