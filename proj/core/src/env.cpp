#include "cotrl/env.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cotrl/gym_cards.hpp"

namespace cotrl {

std::string_view task_name(TaskId task) {
  switch (task) {
    case TaskId::kNumberLine: return "numberline";
    case TaskId::kEzPoints: return "ezpoints";
    case TaskId::kPoints24: return "points24";
    case TaskId::kBlackjack: return "blackjack";
  }
  return "unknown";
}

std::optional<TaskId> parse_task(std::string_view name) {
  for (auto t : {TaskId::kNumberLine, TaskId::kEzPoints, TaskId::kPoints24, TaskId::kBlackjack}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<ActionLabel> ActionLabel::make(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (std::isspace(static_cast<unsigned char>(text.front())) ||
      std::isspace(static_cast<unsigned char>(text.back()))) {
    return std::nullopt;
  }
  for (char c : text) {
    if (std::isupper(static_cast<unsigned char>(c))) return std::nullopt;
  }
  return ActionLabel(std::string(text), Trusted{});
}

ActionLabel::ActionLabel(std::string_view text) {
  auto label = make(text);
  if (!label) throw UsageError("invalid action label: '" + std::string(text) + "'");
  text_ = std::move(label->text_);
}

std::vector<ActionLabel> make_actions(std::initializer_list<std::string_view> texts) {
  std::vector<ActionLabel> out;
  out.reserve(texts.size());
  for (auto t : texts) out.emplace_back(t);
  return out;
}

namespace {

std::string cards_text(std::span<const Card> cards) {
  std::string out;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (i) out += ' ';
    out += to_string(cards[i]);
  }
  return out;
}

struct TextRenderer {
  std::string operator()(const NumberLineState& s) const {
    return "Target: " + std::to_string(s.target) + "\nCurrent: " + std::to_string(s.current);
  }
  std::string operator()(const FormulaGameState& s) const {
    return "Cards: " + cards_text(s.cards) + "\nFormula: " + formula_compact(s.formula);
  }
  std::string operator()(const BlackjackState& s) const {
    std::ostringstream os;
    if (s.player_turn) {
      os << "Dealer: " << to_string(s.dealer_up) << " ??";
    } else {
      std::vector<Card> dealer{s.dealer_up, s.dealer_hole};
      dealer.insert(dealer.end(), s.dealer_drawn.begin(), s.dealer_drawn.end());
      os << "Dealer: " << cards_text(dealer) << " (" << hand_value(dealer).total << ")";
    }
    os << "\nPlayer: " << cards_text(s.player) << " (" << hand_value(s.player).total << ")";
    return os.str();
  }
};

}  // namespace

std::string render_text(const SymbolicState& state) { return std::visit(TextRenderer{}, state); }

bool Env::in_action_space(const ActionLabel& action) const {
  const auto& space = action_space();
  return std::find(space.begin(), space.end(), action) != space.end();
}

Observation Env::reset(std::uint64_t seed) {
  seed_ = seed;
  dynamics_.reseed(mix_seed(seed, 0));
  fallback_.reseed(mix_seed(seed, 1));
  step_ = 0;
  done_ = false;
  started_ = true;
  on_reset(dynamics_);
  return observe();
}

StepResult Env::step(const ActionLabel& action) {
  if (!started_) throw UsageError("step called before reset");
  if (done_) throw UsageError("episode finished");
  if (!in_action_space(action)) {
    throw UsageError("action '" + action.text() + "' is not in the " + std::string(task_name(task_)) +
                     " action space");
  }
  const TransitionOutcome outcome = on_step(action, dynamics_);
  ++step_;
  StepResult result;
  result.reward = outcome.reward;
  result.info.illegal = outcome.illegal;
  result.info.success = outcome.success;
  result.done = outcome.done;
  if (!result.done && step_ >= max_steps()) {
    result.done = true;
    result.info.truncated = true;
  }
  done_ = result.done;
  result.observation = observe();
  return result;
}

Observation Env::observe() const {
  Observation obs;
  obs.task = task_;
  obs.symbolic = symbolic();
  obs.text_render = render_text(obs.symbolic);
  obs.legal_actions = legal_actions();
  obs.step_index = step_;
  return obs;
}

}  // namespace cotrl
