#include <algorithm>
#include <cstdlib>

#include "cotrl/gym_cards.hpp"

namespace cotrl {

NumberLineStep numberline_transition(const NumberLineState& state, const ActionLabel& action) {
  NumberLineStep out;
  out.next = state;
  const int delta = action.text() == "+" ? 1 : -1;
  out.next.current = std::clamp(state.current + delta, 0, state.n_max);
  const int before = std::abs(state.target - state.current);
  const int after = std::abs(state.target - out.next.current);
  if (out.next.current == state.target) {
    out.reward = 1.0;
    out.done = true;
  } else if (after >= before) {
    out.reward = -1.0;
  }
  return out;
}

NumberLineEnv::NumberLineEnv(int n_max)
    : Env(TaskId::kNumberLine), n_max_(n_max), actions_(make_actions({"+", "-"})) {
  if (n_max < 1) throw UsageError("NumberLine n_max must be positive");
  state_.n_max = n_max;
}

void NumberLineEnv::on_reset(Rng& dynamics) {
  const auto span = static_cast<std::uint64_t>(n_max_ + 1);
  state_.n_max = n_max_;
  do {
    state_.target = static_cast<int>(dynamics.uniform_int(span));
    state_.current = static_cast<int>(dynamics.uniform_int(span));
  } while (state_.target == state_.current);
}

TransitionOutcome NumberLineEnv::on_step(const ActionLabel& action, Rng& /*dynamics*/) {
  const auto step = numberline_transition(state_, action);
  state_ = step.next;
  return {step.reward, step.done, false, step.done};
}

}  // namespace cotrl
