#include "cotrl/gym_cards.hpp"

namespace cotrl {

HandValue hand_value(std::span<const Card> cards) {
  int total = 0;
  bool has_ace = false;
  for (const auto& c : cards) {
    total += card_value(c.rank, FaceMode::kTen);
    has_ace = has_ace || c.rank == Rank::kAce;
  }
  if (has_ace && total + 10 <= 21) return {total + 10, true};
  return {total, false};
}

bool is_natural(std::span<const Card> cards) {
  return cards.size() == 2 && hand_value(cards).total == 21;
}

BlackjackStep blackjack_transition(const BlackjackState& state, const ActionLabel& action, Rng& rng,
                                   bool natural_bonus) {
  BlackjackStep out;
  out.next = state;
  if (!state.player_turn) throw UsageError("blackjack hand already finished");

  if (action.text() == "hit") {
    out.next.player.push_back(draw_card(rng));
    if (hand_value(out.next.player).total > 21) {
      out.next.player_turn = false;
      out.reward = -1.0;
      out.done = true;
    }
    return out;
  }

  // stand: dealer reveals and draws to 17 or more.
  out.next.player_turn = false;
  out.done = true;
  std::vector<Card> dealer{state.dealer_up, state.dealer_hole};
  while (hand_value(dealer).total < 17) {
    const Card c = draw_card(rng);
    dealer.push_back(c);
    out.next.dealer_drawn.push_back(c);
  }
  const int player = hand_value(state.player).total;
  const int dealer_total = hand_value(dealer).total;
  const int dealer_score = dealer_total > 21 ? 0 : dealer_total;
  out.reward = player > dealer_score ? 1.0 : (player < dealer_score ? -1.0 : 0.0);
  if (natural_bonus && out.reward == 1.0 && is_natural(state.player)) out.reward = 1.5;
  return out;
}

BlackjackEnv::BlackjackEnv(bool natural_bonus)
    : Env(TaskId::kBlackjack), natural_bonus_(natural_bonus), actions_(make_actions({"stand", "hit"})) {}

void BlackjackEnv::on_reset(Rng& dynamics) {
  state_ = BlackjackState{};
  state_.dealer_up = draw_card(dynamics);
  state_.dealer_hole = draw_card(dynamics);
  state_.player.push_back(draw_card(dynamics));
  state_.player.push_back(draw_card(dynamics));
}

TransitionOutcome BlackjackEnv::on_step(const ActionLabel& action, Rng& dynamics) {
  const auto step = blackjack_transition(state_, action, dynamics, natural_bonus_);
  state_ = step.next;
  return {step.reward, step.done, false, step.done && step.reward > 0.0};
}

}  // namespace cotrl
