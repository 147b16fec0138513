#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>

#include "cotrl/env.hpp"
#include "cotrl/formula.hpp"

namespace cotrl {

/// "+" when the current number is below the target, "-" otherwise.
ActionLabel numberline_expert(const NumberLineState& state);

/// Candidates in order a+b, a*b, b+a, b*a (dealt order first, "+" before "*").
/// Returns the first one equal to 12.
std::optional<Formula> ezpoints_solve(std::span<const int> values);

/// Exhaustive search over value permutations (lexicographic over dealt
/// positions), operator triples from {+,-,*,/} and the five binary tree
/// shapes, in that nesting order. Witnesses are fully parenthesized except
/// at the root, e.g. "( 2 + 10 ) * ( 1 + 1 )".
std::optional<Formula> points24_solve(std::span<const int> values, int target = 24);

/// Enumerates every candidate formula of the task's solver in solver order,
/// skipping those that divide by zero.
/// The callback returns false to stop early.
void for_each_formula_candidate(std::span<const int> values, bool points24,
                                const std::function<bool(const Formula&, const Rational&)>& visit);

/// First solver witness whose token list extends the current formula; this is
/// the plan the formula expert follows from any state on its own trajectory.
std::optional<Formula> formula_plan(const FormulaGameState& state);

/// Next token of the plan, or "=" once the plan is complete. nullopt when the
/// current formula cannot be completed to a witness.
std::optional<ActionLabel> formula_expert(const FormulaGameState& state);

// ---------------------------------------------------------------------------
// Blackjack expectimax over the environment's own dynamics.

struct BlackjackAbstractState {
  int player_sum = 12;     // 4..21
  int dealer_upvalue = 1;  // 1..10, ace is 1
  bool usable_ace = false;
  friend bool operator==(const BlackjackAbstractState&, const BlackjackAbstractState&) = default;
};

BlackjackAbstractState abstract_state(const BlackjackState& state);

struct BlackjackOutcome {
  double expected_reward = 0.0;
  double win = 0.0;
  double draw = 0.0;
  double loss = 0.0;
};

/// Returns true to hit.
using BlackjackPolicy = std::function<bool(const BlackjackAbstractState&)>;

class BlackjackOracle {
 public:
  explicit BlackjackOracle(bool natural_bonus = false);

  double stand_value(const BlackjackAbstractState& s) const;
  double hit_value(const BlackjackAbstractState& s) const;
  double value(const BlackjackAbstractState& s) const;
  /// Ties go to "stand".
  ActionLabel optimal(const BlackjackAbstractState& s) const;
  bool hits(const BlackjackAbstractState& s) const;

  /// Probability of each dealer final total (17..21) or bust, from an upcard.
  /// Index 0..4 are totals 17..21, index 5 is bust.
  std::span<const double, 6> dealer_distribution(int upvalue) const;

  /// Exact outcome of a policy from the initial-deal distribution.
  BlackjackOutcome policy_outcome(const BlackjackPolicy& policy) const;
  BlackjackOutcome optimal_outcome() const;

  bool natural_bonus() const { return natural_bonus_; }

 private:
  double solve(int sum, bool usable, int up);

  bool natural_bonus_;
  std::array<std::array<double, 6>, 11> dealer_{};  // by upvalue 1..10
  // value_[up][usable][sum], sums 0..21
  std::array<std::array<std::array<double, 22>, 2>, 11> value_{};
  std::array<std::array<std::array<bool, 22>, 2>, 11> solved_{};
};

/// Probability of drawing each value 1..10 from the infinite deck.
double draw_probability(int value);

ActionLabel blackjack_optimal(const BlackjackAbstractState& state);
BlackjackOutcome blackjack_optimal_value(bool natural_bonus = false);

}  // namespace cotrl
