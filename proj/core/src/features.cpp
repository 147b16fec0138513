#include "cotrl/features.hpp"

#include <algorithm>

#include "cotrl/gym_cards.hpp"

namespace cotrl {

namespace {

int max_card_value(const std::vector<ActionLabel>& actions) {
  const bool face = std::any_of(actions.begin(), actions.end(), [](const ActionLabel& a) { return a.text() == "11"; });
  return face ? 13 : 10;
}

// Every action except "=" can appear in a formula.
std::vector<std::string> formula_symbols(const std::vector<ActionLabel>& actions) {
  std::vector<std::string> out;
  for (const auto& a : actions) {
    if (a.text() != "=") out.push_back(a.text());
  }
  return out;
}

std::vector<double> formula_features(const FormulaGameState& s, const std::vector<ActionLabel>& actions) {
  const int max_value = max_card_value(actions);
  const auto symbols = formula_symbols(actions);
  const std::size_t m = symbols.size();
  std::vector<double> f(static_cast<std::size_t>(max_value) + 2 * m + 1, 0.0);
  for (int v : s.values) {
    if (v >= 1 && v <= max_value) f[v - 1] += 1.0;
  }
  const std::size_t counts = max_value;
  const std::size_t last = counts + m;
  for (const auto& tok : s.formula) {
    const auto it = std::find(symbols.begin(), symbols.end(), tok);
    if (it != symbols.end()) f[counts + (it - symbols.begin())] += 1.0;
  }
  if (s.formula.empty()) {
    f[last + m] = 1.0;
  } else {
    const auto it = std::find(symbols.begin(), symbols.end(), s.formula.back());
    if (it != symbols.end()) f[last + (it - symbols.begin())] = 1.0;
  }
  return f;
}

}  // namespace

std::vector<double> observation_features(const Observation& obs) {
  if (const auto* nl = std::get_if<NumberLineState>(&obs.symbolic)) {
    const int n = nl->n_max + 1;
    std::vector<double> f(2 * static_cast<std::size_t>(n), 0.0);
    f[nl->target] = 1.0;
    f[n + nl->current] = 1.0;
    return f;
  }
  if (const auto* bj = std::get_if<BlackjackState>(&obs.symbolic)) {
    std::vector<double> f(18 + 10 + 1, 0.0);
    const auto hv = hand_value(bj->player);
    if (hv.total >= 4 && hv.total <= 21) f[hv.total - 4] = 1.0;
    f[18 + card_value(bj->dealer_up.rank, FaceMode::kTen) - 1] = 1.0;
    f[28] = hv.usable_ace ? 1.0 : 0.0;
    return f;
  }
  return formula_features(std::get<FormulaGameState>(obs.symbolic), obs.legal_actions);
}

int feature_dim(TaskId task, const EnvOptions& options) {
  switch (task) {
    case TaskId::kNumberLine: return 2 * (options.n_max + 1);
    case TaskId::kBlackjack: return 29;
    case TaskId::kEzPoints:
    case TaskId::kPoints24: {
      const auto spec = task == TaskId::kEzPoints ? ezpoints_spec(options.face) : points24_spec(options.face);
      const auto actions = formula_action_space(spec);
      const int symbols = static_cast<int>(actions.size()) - 1;
      return max_card_value(actions) + 2 * symbols + 1;
    }
  }
  throw UsageError("unknown task");
}

}  // namespace cotrl
