#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

// ---------------------------------------------------------------------------
// NumberLine: move `current` to `target` with "+" / "-" on [0, n_max].

struct NumberLineStep {
  NumberLineState next;
  double reward = 0.0;
  bool done = false;  // goal reached; the horizon is handled by the env
};

/// Clamped move. +1 on reaching the target, -1 when the move does not bring
/// the current number strictly closer (boundary bumps included), else 0.
NumberLineStep numberline_transition(const NumberLineState& state, const ActionLabel& action);

class NumberLineEnv final : public Env {
 public:
  explicit NumberLineEnv(int n_max = 5);

  int max_steps() const override { return 2 * n_max_; }
  const std::vector<ActionLabel>& action_space() const override { return actions_; }
  SymbolicState symbolic() const override { return state_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<NumberLineEnv>(*this); }

  const NumberLineState& state() const { return state_; }
  /// Test hook: place the env in an arbitrary mid-episode state.
  void set_state(const NumberLineState& state) { state_ = state; }

 protected:
  void on_reset(Rng& dynamics) override;
  TransitionOutcome on_step(const ActionLabel& action, Rng& dynamics) override;

 private:
  int n_max_;
  NumberLineState state_;
  std::vector<ActionLabel> actions_;
};

// ---------------------------------------------------------------------------
// EZPoints / Points24: append numbers and operators to a formula, then "=".

struct FormulaGameSpec {
  TaskId task = TaskId::kEzPoints;
  int num_cards = 2;
  int target = 12;
  int horizon = 5;
  std::vector<std::string> operators;  // appended symbols other than numbers
  FaceMode face = FaceMode::kTen;
  bool guarantee_solvable = true;
};

FormulaGameSpec ezpoints_spec(FaceMode face = FaceMode::kTen);
FormulaGameSpec points24_spec(FaceMode face = FaceMode::kTen);

/// Number actions "1".."10" (or "13" with face values), operators, then "=".
std::vector<ActionLabel> formula_action_space(const FormulaGameSpec& spec);

struct FormulaStep {
  FormulaGameState next;
  double reward = 0.0;
  bool done = false;
  bool illegal = false;
  bool success = false;
};

/// Shared EZPoints/Points24 rule: numbers must match an unused card, other
/// symbols always append, illegal moves cost -1 and leave the state alone,
/// "=" pays +10 iff every card is used once and the formula hits the target.
FormulaStep formula_transition(const FormulaGameState& state, const ActionLabel& action);
inline FormulaStep ezpoints_transition(const FormulaGameState& s, const ActionLabel& a) { return formula_transition(s, a); }
inline FormulaStep points24_transition(const FormulaGameState& s, const ActionLabel& a) { return formula_transition(s, a); }

/// Rejection-samples two cards until a {+,*} formula over both equals 12.
std::array<Card, 2> ezpoints_sample_cards(Rng& rng, FaceMode face = FaceMode::kTen);

FormulaGameState make_formula_state(std::span<const Card> cards, int target, FaceMode face);

class FormulaGameEnv final : public Env {
 public:
  explicit FormulaGameEnv(FormulaGameSpec spec);

  int max_steps() const override { return spec_.horizon; }
  const std::vector<ActionLabel>& action_space() const override { return actions_; }
  SymbolicState symbolic() const override { return state_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<FormulaGameEnv>(*this); }

  const FormulaGameSpec& spec() const { return spec_; }
  const FormulaGameState& state() const { return state_; }
  void set_state(const FormulaGameState& state) { state_ = state; }

 protected:
  void on_reset(Rng& dynamics) override;
  TransitionOutcome on_step(const ActionLabel& action, Rng& dynamics) override;

 private:
  FormulaGameSpec spec_;
  FormulaGameState state_;
  std::vector<ActionLabel> actions_;
};

// ---------------------------------------------------------------------------
// Blackjack: infinite deck, dealer stands on all 17s.

struct HandValue {
  int total = 0;
  bool usable_ace = false;
};

/// Best total with an ace counted as 11 when that does not bust.
HandValue hand_value(std::span<const Card> cards);
/// Ace plus a ten-valued card, exactly two cards.
bool is_natural(std::span<const Card> cards);

struct BlackjackStep {
  BlackjackState next;
  double reward = 0.0;
  bool done = false;
};

BlackjackStep blackjack_transition(const BlackjackState& state, const ActionLabel& action, Rng& rng,
                                   bool natural_bonus = false);

class BlackjackEnv final : public Env {
 public:
  explicit BlackjackEnv(bool natural_bonus = false);

  /// Never binds: 20 hits without busting is impossible.
  int max_steps() const override { return 20; }
  const std::vector<ActionLabel>& action_space() const override { return actions_; }
  SymbolicState symbolic() const override { return state_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<BlackjackEnv>(*this); }

  const BlackjackState& state() const { return state_; }
  void set_state(const BlackjackState& state) { state_ = state; }
  bool natural_bonus() const { return natural_bonus_; }

 protected:
  void on_reset(Rng& dynamics) override;
  TransitionOutcome on_step(const ActionLabel& action, Rng& dynamics) override;

 private:
  bool natural_bonus_;
  BlackjackState state_;
  std::vector<ActionLabel> actions_;
};

}  // namespace cotrl
