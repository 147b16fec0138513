#include "cotrl/formula.hpp"

#include <cctype>

namespace cotrl {
namespace {

int precedence(char op) { return (op == '*' || op == '/') ? 2 : 1; }

std::optional<Rational> apply(char op, const Rational& a, const Rational& b) {
  switch (op) {
    case '+': return Rational::add(a, b);
    case '-': return Rational::sub(a, b);
    case '*': return Rational::mul(a, b);
    case '/': return Rational::div(a, b);
    default: return std::nullopt;
  }
}

// Pops one operator and its two operands, pushing the result.
bool reduce(std::vector<Rational>& values, std::vector<char>& ops) {
  if (values.size() < 2 || ops.empty()) return false;
  const char op = ops.back();
  ops.pop_back();
  const Rational rhs = values.back();
  values.pop_back();
  const Rational lhs = values.back();
  values.pop_back();
  auto result = apply(op, lhs, rhs);
  if (!result) return false;
  values.push_back(*result);
  return true;
}

}  // namespace

bool is_number_token(std::string_view token) {
  if (token.empty() || token.size() > 6 || token[0] == '0') return false;
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool is_operator_token(std::string_view token) {
  return token == "+" || token == "-" || token == "*" || token == "/";
}

std::optional<Rational> eval_formula(std::span<const std::string> tokens) {
  std::vector<Rational> values;
  std::vector<char> ops;  // operators and '('
  bool expect_operand = true;

  for (const auto& tok : tokens) {
    if (is_number_token(tok)) {
      if (!expect_operand) return std::nullopt;
      values.emplace_back(std::stoll(tok));
      expect_operand = false;
    } else if (tok == "(") {
      if (!expect_operand) return std::nullopt;
      ops.push_back('(');
    } else if (tok == ")") {
      if (expect_operand) return std::nullopt;
      while (!ops.empty() && ops.back() != '(') {
        if (!reduce(values, ops)) return std::nullopt;
      }
      if (ops.empty()) return std::nullopt;
      ops.pop_back();
    } else if (is_operator_token(tok)) {
      if (expect_operand) return std::nullopt;
      const char op = tok[0];
      while (!ops.empty() && ops.back() != '(' && precedence(ops.back()) >= precedence(op)) {
        if (!reduce(values, ops)) return std::nullopt;
      }
      ops.push_back(op);
      expect_operand = true;
    } else {
      return std::nullopt;
    }
  }
  if (expect_operand) return std::nullopt;
  while (!ops.empty()) {
    if (ops.back() == '(') return std::nullopt;
    if (!reduce(values, ops)) return std::nullopt;
  }
  if (values.size() != 1) return std::nullopt;
  return values.front();
}

std::string formula_compact(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

std::string formula_spaced(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::optional<Formula> parse_formula(std::string_view text) {
  Formula out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ') {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '(' || c == ')') {
      out.emplace_back(1, c);
      ++i;
    } else {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace cotrl
