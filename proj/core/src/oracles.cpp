#include "cotrl/oracles.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "cotrl/gym_cards.hpp"

namespace cotrl {

ActionLabel numberline_expert(const NumberLineState& state) {
  return ActionLabel(state.current < state.target ? "+" : "-");
}

// ---------------------------------------------------------------------------
// Formula solvers

namespace {

using OpFn = std::optional<Rational> (*)(const Rational&, const Rational&);

struct Op {
  const char* symbol;
  OpFn fn;
};

constexpr std::array<Op, 4> kPoints24Ops{{{"+", &Rational::add},
                                          {"-", &Rational::sub},
                                          {"*", &Rational::mul},
                                          {"/", &Rational::div}}};

std::optional<Rational> combine(const Op& op, const std::optional<Rational>& a, const std::optional<Rational>& b) {
  if (!a || !b) return std::nullopt;
  return op.fn(*a, *b);
}

// Tokens for one of the five binary tree shapes over (a,b,c,d) with ops (x,y,z).
Formula shape_tokens(int shape, const std::array<std::string, 4>& n, const std::array<std::string, 3>& o) {
  switch (shape) {
    case 0: return {"(", "(", n[0], o[0], n[1], ")", o[1], n[2], ")", o[2], n[3]};
    case 1: return {"(", n[0], o[0], "(", n[1], o[1], n[2], ")", ")", o[2], n[3]};
    case 2: return {"(", n[0], o[0], n[1], ")", o[1], "(", n[2], o[2], n[3], ")"};
    case 3: return {n[0], o[0], "(", "(", n[1], o[1], n[2], ")", o[2], n[3], ")"};
    default: return {n[0], o[0], "(", n[1], o[1], "(", n[2], o[2], n[3], ")", ")"};
  }
}

std::optional<Rational> shape_value(int shape, const std::array<Rational, 4>& v, const std::array<Op, 3>& o) {
  switch (shape) {
    case 0: return combine(o[2], combine(o[1], combine(o[0], v[0], v[1]), v[2]), v[3]);
    case 1: return combine(o[2], combine(o[0], v[0], combine(o[1], v[1], v[2])), v[3]);
    case 2: return combine(o[1], combine(o[0], v[0], v[1]), combine(o[2], v[2], v[3]));
    case 3: return combine(o[0], v[0], combine(o[2], combine(o[1], v[1], v[2]), v[3]));
    default: return combine(o[0], v[0], combine(o[1], v[1], combine(o[2], v[2], v[3])));
  }
}

bool extends(const Formula& candidate, const Formula& prefix) {
  if (prefix.size() > candidate.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), candidate.begin());
}

}  // namespace

void for_each_formula_candidate(std::span<const int> values, bool points24,
                                const std::function<bool(const Formula&, const Rational&)>& visit) {
  if (!points24) {
    if (values.size() != 2) throw UsageError("EZPoints solver expects two values");
    const std::string a = std::to_string(values[0]);
    const std::string b = std::to_string(values[1]);
    const Rational va(values[0]);
    const Rational vb(values[1]);
    const std::array<std::tuple<Formula, Rational>, 4> candidates{{
        {{a, "+", b}, *Rational::add(va, vb)},
        {{a, "*", b}, *Rational::mul(va, vb)},
        {{b, "+", a}, *Rational::add(vb, va)},
        {{b, "*", a}, *Rational::mul(vb, va)},
    }};
    for (const auto& [f, v] : candidates) {
      if (!visit(f, v)) return;
    }
    return;
  }

  if (values.size() != 4) throw UsageError("Points24 solver expects four values");
  std::array<int, 4> order{0, 1, 2, 3};
  do {
    std::array<std::string, 4> names;
    std::array<Rational, 4> nums;
    for (int i = 0; i < 4; ++i) {
      names[i] = std::to_string(values[order[i]]);
      nums[i] = Rational(values[order[i]]);
    }
    for (const auto& o1 : kPoints24Ops) {
      for (const auto& o2 : kPoints24Ops) {
        for (const auto& o3 : kPoints24Ops) {
          const std::array<Op, 3> ops{o1, o2, o3};
          const std::array<std::string, 3> syms{o1.symbol, o2.symbol, o3.symbol};
          for (int shape = 0; shape < 5; ++shape) {
            const auto value = shape_value(shape, nums, ops);
            if (!value) continue;
            if (!visit(shape_tokens(shape, names, syms), *value)) return;
          }
        }
      }
    }
  } while (std::next_permutation(order.begin(), order.end()));
}

std::optional<Formula> ezpoints_solve(std::span<const int> values) {
  std::optional<Formula> found;
  for_each_formula_candidate(values, false, [&](const Formula& f, const Rational& v) {
    if (v == Rational(12)) {
      found = f;
      return false;
    }
    return true;
  });
  return found;
}

std::optional<Formula> points24_solve(std::span<const int> values, int target) {
  std::optional<Formula> found;
  for_each_formula_candidate(values, true, [&](const Formula& f, const Rational& v) {
    if (v == Rational(target)) {
      found = f;
      return false;
    }
    return true;
  });
  return found;
}

std::optional<Formula> formula_plan(const FormulaGameState& state) {
  std::optional<Formula> found;
  const bool points24 = state.values.size() == 4;
  for_each_formula_candidate(state.values, points24, [&](const Formula& f, const Rational& v) {
    if (v == Rational(state.target) && extends(f, state.formula)) {
      found = f;
      return false;
    }
    return true;
  });
  return found;
}

std::optional<ActionLabel> formula_expert(const FormulaGameState& state) {
  const auto plan = formula_plan(state);
  if (!plan) return std::nullopt;
  if (plan->size() == state.formula.size()) return ActionLabel("=");
  return ActionLabel((*plan)[state.formula.size()]);
}

// ---------------------------------------------------------------------------
// Blackjack

double draw_probability(int value) { return value == 10 ? 4.0 / 13.0 : 1.0 / 13.0; }

namespace {

struct PlayerNext {
  int sum = 0;
  bool usable = false;
  bool bust = false;
};

PlayerNext player_after_draw(int sum, bool usable, int v) {
  const int hard = (usable ? sum - 10 : sum) + v;
  const bool ace = usable || v == 1;
  PlayerNext n;
  if (ace && hard + 10 <= 21) {
    n.sum = hard + 10;
    n.usable = true;
  } else {
    n.sum = hard;
  }
  n.bust = n.sum > 21;
  return n;
}

// Dealer distribution from a hard total and ace flag; dealer stands on all 17s.
void dealer_recurse(int hard, bool ace, double p, std::array<double, 6>& out) {
  const int total = (ace && hard + 10 <= 21) ? hard + 10 : hard;
  if (total > 21) {
    out[5] += p;
    return;
  }
  if (total >= 17) {
    out[total - 17] += p;
    return;
  }
  for (int v = 1; v <= 10; ++v) dealer_recurse(hard + v, ace || v == 1, p * draw_probability(v), out);
}

struct Triple {
  double win = 0.0;
  double draw = 0.0;
  double loss = 0.0;
};

Triple stand_triple(int sum, std::span<const double, 6> dealer) {
  Triple t;
  t.win = dealer[5];
  for (int total = 17; total <= 21; ++total) {
    const double p = dealer[total - 17];
    if (total < sum) {
      t.win += p;
    } else if (total == sum) {
      t.draw += p;
    } else {
      t.loss += p;
    }
  }
  return t;
}

}  // namespace

BlackjackAbstractState abstract_state(const BlackjackState& state) {
  const auto hv = hand_value(state.player);
  return {hv.total, card_value(state.dealer_up.rank, FaceMode::kTen), hv.usable_ace};
}

BlackjackOracle::BlackjackOracle(bool natural_bonus) : natural_bonus_(natural_bonus) {
  for (int up = 1; up <= 10; ++up) dealer_recurse(up, up == 1, 1.0, dealer_[up]);
  for (int up = 1; up <= 10; ++up) {
    for (int sum = 21; sum >= 4; --sum) {
      solve(sum, false, up);
      if (sum >= 12) solve(sum, true, up);
    }
  }
}

std::span<const double, 6> BlackjackOracle::dealer_distribution(int upvalue) const {
  return std::span<const double, 6>(dealer_.at(upvalue));
}

double BlackjackOracle::stand_value(const BlackjackAbstractState& s) const {
  const Triple t = stand_triple(s.player_sum, dealer_distribution(s.dealer_upvalue));
  return t.win - t.loss;
}

double BlackjackOracle::hit_value(const BlackjackAbstractState& s) const {
  double total = 0.0;
  for (int v = 1; v <= 10; ++v) {
    const auto n = player_after_draw(s.player_sum, s.usable_ace, v);
    total += draw_probability(v) * (n.bust ? -1.0 : value_[s.dealer_upvalue][n.usable][n.sum]);
  }
  return total;
}

double BlackjackOracle::solve(int sum, bool usable, int up) {
  if (solved_[up][usable][sum]) return value_[up][usable][sum];
  const BlackjackAbstractState s{sum, up, usable};
  // Successor states have a strictly larger hard total; solve them first.
  for (int v = 1; v <= 10; ++v) {
    const auto n = player_after_draw(sum, usable, v);
    if (!n.bust) solve(n.sum, n.usable, up);
  }
  const double v = std::max(stand_value(s), hit_value(s));
  value_[up][usable][sum] = v;
  solved_[up][usable][sum] = true;
  return v;
}

double BlackjackOracle::value(const BlackjackAbstractState& s) const {
  return value_.at(s.dealer_upvalue).at(s.usable_ace).at(s.player_sum);
}

bool BlackjackOracle::hits(const BlackjackAbstractState& s) const { return hit_value(s) > stand_value(s); }

ActionLabel BlackjackOracle::optimal(const BlackjackAbstractState& s) const {
  return ActionLabel(hits(s) ? "hit" : "stand");
}

BlackjackOutcome BlackjackOracle::policy_outcome(const BlackjackPolicy& policy) const {
  std::map<std::tuple<int, bool, int>, Triple> memo;
  std::function<Triple(int, bool, int)> follow = [&](int sum, bool usable, int up) -> Triple {
    const auto key = std::make_tuple(sum, usable, up);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    Triple t;
    if (policy(BlackjackAbstractState{sum, up, usable})) {
      for (int v = 1; v <= 10; ++v) {
        const double p = draw_probability(v);
        const auto n = player_after_draw(sum, usable, v);
        if (n.bust) {
          t.loss += p;
        } else {
          const Triple sub = follow(n.sum, n.usable, up);
          t.win += p * sub.win;
          t.draw += p * sub.draw;
          t.loss += p * sub.loss;
        }
      }
    } else {
      t = stand_triple(sum, dealer_distribution(up));
    }
    memo.emplace(key, t);
    return t;
  };

  BlackjackOutcome out;
  for (int c1 = 1; c1 <= 10; ++c1) {
    for (int c2 = 1; c2 <= 10; ++c2) {
      for (int up = 1; up <= 10; ++up) {
        const double p = draw_probability(c1) * draw_probability(c2) * draw_probability(up);
        const auto first = player_after_draw(0, false, c1);
        const auto start = player_after_draw(first.sum, first.usable, c2);
        const bool natural = start.sum == 21;
        const Triple t = follow(start.sum, start.usable, up);
        // A natural that stands and wins is paid 1.5 under the bonus rule.
        const bool bonus = natural_bonus_ && natural && !policy(BlackjackAbstractState{start.sum, up, start.usable});
        out.win += p * t.win;
        out.draw += p * t.draw;
        out.loss += p * t.loss;
        out.expected_reward += p * ((bonus ? 1.5 : 1.0) * t.win - t.loss);
      }
    }
  }
  return out;
}

BlackjackOutcome BlackjackOracle::optimal_outcome() const {
  return policy_outcome([this](const BlackjackAbstractState& s) { return hits(s); });
}

ActionLabel blackjack_optimal(const BlackjackAbstractState& state) {
  static const BlackjackOracle oracle(false);
  return oracle.optimal(state);
}

BlackjackOutcome blackjack_optimal_value(bool natural_bonus) {
  return BlackjackOracle(natural_bonus).optimal_outcome();
}

}  // namespace cotrl
