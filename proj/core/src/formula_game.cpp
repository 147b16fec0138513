#include <algorithm>

#include "cotrl/gym_cards.hpp"
#include "cotrl/oracles.hpp"

namespace cotrl {

FormulaGameSpec ezpoints_spec(FaceMode face) {
  FormulaGameSpec spec;
  spec.task = TaskId::kEzPoints;
  spec.num_cards = 2;
  spec.target = 12;
  spec.horizon = 5;
  spec.operators = {"+", "*"};
  spec.face = face;
  spec.guarantee_solvable = true;
  return spec;
}

FormulaGameSpec points24_spec(FaceMode face) {
  FormulaGameSpec spec;
  spec.task = TaskId::kPoints24;
  spec.num_cards = 4;
  spec.target = 24;
  spec.horizon = 20;
  spec.operators = {"+", "-", "*", "/", "(", ")"};
  spec.face = face;
  spec.guarantee_solvable = false;
  return spec;
}

std::vector<ActionLabel> formula_action_space(const FormulaGameSpec& spec) {
  std::vector<ActionLabel> out;
  const int max_number = spec.face == FaceMode::kFace ? 13 : 10;
  for (int v = 1; v <= max_number; ++v) out.emplace_back(std::to_string(v));
  for (const auto& op : spec.operators) out.emplace_back(op);
  out.emplace_back("=");
  return out;
}

FormulaGameState make_formula_state(std::span<const Card> cards, int target, FaceMode face) {
  FormulaGameState s;
  s.cards.assign(cards.begin(), cards.end());
  for (const auto& c : cards) s.values.push_back(card_value(c, face));
  s.used.assign(cards.size(), false);
  s.target = target;
  return s;
}

FormulaStep formula_transition(const FormulaGameState& state, const ActionLabel& action) {
  FormulaStep out;
  out.next = state;
  const std::string& a = action.text();

  if (a == "=") {
    out.done = true;
    const bool all_used = std::all_of(state.used.begin(), state.used.end(), [](bool u) { return u; });
    const auto value = eval_formula(state.formula);
    if (all_used && value && *value == Rational(state.target)) {
      out.reward = 10.0;
      out.success = true;
    } else {
      out.reward = -1.0;
    }
    return out;
  }

  if (is_number_token(a)) {
    const int v = std::stoi(a);
    for (std::size_t i = 0; i < state.values.size(); ++i) {
      if (!state.used[i] && state.values[i] == v) {
        out.next.used[i] = true;
        out.next.formula.push_back(a);
        return out;
      }
    }
    out.illegal = true;
    out.reward = -1.0;
    return out;
  }

  out.next.formula.push_back(a);
  return out;
}

std::array<Card, 2> ezpoints_sample_cards(Rng& rng, FaceMode face) {
  while (true) {
    const std::array<Card, 2> cards{draw_card(rng), draw_card(rng)};
    const std::array<int, 2> values{card_value(cards[0], face), card_value(cards[1], face)};
    if (ezpoints_solve(values)) return cards;
  }
}

FormulaGameEnv::FormulaGameEnv(FormulaGameSpec spec)
    : Env(spec.task), spec_(std::move(spec)), actions_(formula_action_space(spec_)) {}

void FormulaGameEnv::on_reset(Rng& dynamics) {
  std::vector<Card> cards;
  if (spec_.guarantee_solvable && spec_.num_cards == 2) {
    const auto pair = ezpoints_sample_cards(dynamics, spec_.face);
    cards.assign(pair.begin(), pair.end());
  } else {
    for (int i = 0; i < spec_.num_cards; ++i) cards.push_back(draw_card(dynamics));
  }
  state_ = make_formula_state(cards, spec_.target, spec_.face);
}

TransitionOutcome FormulaGameEnv::on_step(const ActionLabel& action, Rng& /*dynamics*/) {
  const auto step = formula_transition(state_, action);
  state_ = step.next;
  return {step.reward, step.done, step.illegal, step.success};
}

}  // namespace cotrl
