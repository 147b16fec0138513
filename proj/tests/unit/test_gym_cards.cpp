#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "cotrl/formula.hpp"
#include "cotrl/gym_cards.hpp"
#include "cotrl/oracles.hpp"
#include "reference.hpp"

using namespace cotrl;

namespace {

Card c(Rank r, Suit s = Suit::kSpades) { return Card{r, s}; }

Formula toks(std::string_view s) { return *parse_formula(s); }

FormulaGameState ez_state(std::vector<Card> cards) { return make_formula_state(cards, 12, FaceMode::kTen); }

BlackjackState bj(std::vector<Card> player, Card up, Card hole) {
  BlackjackState s;
  s.player = std::move(player);
  s.dealer_up = up;
  s.dealer_hole = hole;
  return s;
}

}  // namespace

TEST_CASE("card values") {
  CHECK(card_value(Rank::kAce) == 1);
  CHECK(card_value(Rank::k7) == 7);
  for (auto r : {Rank::k10, Rank::kJack, Rank::kQueen, Rank::kKing}) CHECK(card_value(r) == 10);
  CHECK(card_value(Rank::kJack, FaceMode::kFace) == 11);
  CHECK(card_value(Rank::kQueen, FaceMode::kFace) == 12);
  CHECK(card_value(Rank::kKing, FaceMode::kFace) == 13);
}

TEST_CASE("card codes round trip") {
  CHECK(to_string(c(Rank::kKing, Suit::kSpades)) == "KS");
  CHECK(to_string(c(Rank::k7, Suit::kHearts)) == "7H");
  CHECK(to_string(c(Rank::kAce, Suit::kDiamonds)) == "AD");
  for (int r = 1; r <= 13; ++r)
    for (int s = 0; s < 4; ++s) {
      const Card card{static_cast<Rank>(r), static_cast<Suit>(s)};
      CHECK(parse_card(to_string(card)) == card);
    }
  CHECK_FALSE(parse_card("ZZ"));
  CHECK_FALSE(parse_card("K"));
}

TEST_CASE("NumberLine transition examples") {
  auto r = numberline_transition({3, 0, 5}, ActionLabel("+"));
  CHECK(r.next.current == 1);
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
  r = numberline_transition({3, 4, 5}, ActionLabel("+"));
  CHECK(r.next.current == 5);
  CHECK(r.reward == -1.0);
  r = numberline_transition({3, 4, 5}, ActionLabel("-"));
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  r = numberline_transition({3, 0, 5}, ActionLabel("-"));  // blocked at the boundary
  CHECK(r.next.current == 0);
  CHECK(r.reward == -1.0);
}

TEST_CASE("NumberLine reward property over all states") {
  for (int n = 1; n <= 8; ++n)
    for (int x = 0; x <= n; ++x)
      for (int y = 0; y <= n; ++y) {
        if (x == y) continue;
        for (const char* a : {"+", "-"}) {
          const auto r = numberline_transition({x, y, n}, ActionLabel(a));
          const int y2 = r.next.current;
          CHECK(y2 >= 0);
          CHECK(y2 <= n);
          CHECK((r.reward == 1.0) == (y2 == x));
          CHECK((r.reward == -1.0) == (y2 != x && std::abs(x - y2) >= std::abs(x - y)));
        }
      }
}

TEST_CASE("EZPoints transition examples") {
  auto s = ez_state({c(Rank::k7), c(Rank::k5)});
  auto r = formula_transition(s, ActionLabel("5"));
  CHECK(r.reward == 0.0);
  r = formula_transition(r.next, ActionLabel("+"));
  CHECK(formula_compact(r.next.formula) == "5+");
  CHECK(r.reward == 0.0);
  const auto bad = formula_transition(formula_transition(s, ActionLabel("5")).next, ActionLabel("9"));
  CHECK(bad.illegal);
  CHECK(bad.reward == -1.0);
  CHECK(formula_compact(bad.next.formula) == "5");
  r = formula_transition(r.next, ActionLabel("7"));
  r = formula_transition(r.next, ActionLabel("="));
  CHECK(r.reward == 10.0);
  CHECK(r.done);
  CHECK(r.success);
}

TEST_CASE("formula scoring rules") {
  SUBCASE("duplicates tracked per card instance") {
    auto s = ez_state({c(Rank::k6), c(Rank::k6, Suit::kHearts)});
    auto r = formula_transition(s, ActionLabel("6"));
    r = formula_transition(r.next, ActionLabel("+"));
    r = formula_transition(r.next, ActionLabel("6"));
    CHECK_FALSE(r.illegal);
    const auto third = formula_transition(r.next, ActionLabel("6"));
    CHECK(third.illegal);
    CHECK(formula_transition(r.next, ActionLabel("=")).reward == 10.0);
  }
  SUBCASE("unused card scores -1") {
    auto s = make_formula_state(std::vector<Card>{c(Rank::k2), c(Rank::kQueen), c(Rank::k2), c(Rank::kAce)}, 24,
                                FaceMode::kTen);
    s.formula = toks("2*10+2");
    s.used = {true, true, true, false};
    const auto r = formula_transition(s, ActionLabel("="));
    CHECK(r.reward == -1.0);
    CHECK(r.done);
  }
  SUBCASE("= on empty formula ends with -1") {
    const auto r = formula_transition(ez_state({c(Rank::k7), c(Rank::k5)}), ActionLabel("="));
    CHECK(r.reward == -1.0);
    CHECK(r.done);
  }
  SUBCASE("division by zero is invalid") {
    auto s = make_formula_state(std::vector<Card>{c(Rank::k8), c(Rank::k5), c(Rank::k5, Suit::kHearts), c(Rank::k3)},
                                24, FaceMode::kTen);
    s.formula = toks("8/(5-5)*3");
    s.used = {true, true, true, true};
    CHECK(formula_transition(s, ActionLabel("=")).reward == -1.0);
  }
}

TEST_CASE("Points24 worked example") {
  auto s = make_formula_state(std::vector<Card>{c(Rank::kAce), c(Rank::k2), c(Rank::k10), c(Rank::kAce, Suit::kHearts)},
                              24, FaceMode::kTen);
  FormulaStep r{s};
  for (const char* a : {"(", "2", "+", "10", ")", "*", "(", "1", "+", "1", ")"}) {
    r = formula_transition(r.next, ActionLabel(a));
    REQUIRE_FALSE(r.illegal);
  }
  r = formula_transition(r.next, ActionLabel("="));
  CHECK(r.reward == 10.0);
}

TEST_CASE("illegal formula actions never mutate state") {
  for (auto task : {TaskId::kEzPoints, TaskId::kPoints24}) {
    auto env = make_env(task);
    Rng pick(1);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      env->reset(seed);
      while (!env->done()) {
        const auto before = env->symbolic();
        const auto& space = env->action_space();
        const auto r = env->step(space[pick.uniform_int(space.size())]);
        if (r.info.illegal) CHECK(r.observation.symbolic == before);
      }
    }
  }
}

TEST_CASE("eval_formula examples") {
  CHECK(eval_formula(toks("5 + 7")) == Rational(12));
  CHECK(eval_formula(toks("(2 + 10) * (1 + 1)")) == Rational(24));
  CHECK_FALSE(eval_formula(toks("8 / ( 1 - 1 )")));
  CHECK(eval_formula(toks("8 / 3 * 3")) == Rational(8));
  CHECK(eval_formula(toks("10 - 4 - 3")) == Rational(3));
  CHECK(eval_formula(toks("1 / 3 + 1 / 6")) == Rational::of(1, 2));
  CHECK_FALSE(eval_formula(toks("5 +")));
  CHECK_FALSE(eval_formula(toks("( 5 + 7")));
  CHECK_FALSE(eval_formula(toks("5 + 7 )")));
  CHECK_FALSE(eval_formula(Formula{}));
  CHECK_FALSE(eval_formula(toks("5 7")));
  CHECK_FALSE(eval_formula(toks("( )")));
}

TEST_CASE("eval_formula agrees with the recursive-descent reference") {
  std::mt19937_64 g(2024);
  int valid = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto f = ref::random_formula(g, 7);
    const auto mine = eval_formula(f);
    const auto theirs = ref::eval(f);
    REQUIRE(mine.has_value() == theirs.has_value());
    if (mine) {
      ++valid;
      CHECK(mine->num() == static_cast<std::int64_t>(theirs->n));
      CHECK(mine->den() == static_cast<std::int64_t>(theirs->d));
    }
  }
  CHECK(valid > 15000);
}

TEST_CASE("formula renderings round trip") {
  const auto f = toks("(2+10)*(1+1)");
  CHECK(formula_spaced(f) == "( 2 + 10 ) * ( 1 + 1 )");
  CHECK(parse_formula(formula_spaced(f)) == f);
  CHECK(parse_formula(formula_compact(f)) == f);
  CHECK_FALSE(parse_formula("2 ^ 3"));
}

TEST_CASE("EZPoints sampler always yields solvable pairs") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const auto pair = ezpoints_sample_cards(rng);
    const int a = card_value(pair[0]), b = card_value(pair[1]);
    CHECK((a + b == 12 || a * b == 12));
  }
}

TEST_CASE("EZPoints sampler acceptance set") {
  CHECK(ezpoints_solve(std::vector<int>{7, 5}));
  CHECK(ezpoints_solve(std::vector<int>{3, 4}));
  CHECK_FALSE(ezpoints_solve(std::vector<int>{2, 9}));
}

TEST_CASE("blackjack draws are uniform over ranks") {
  Rng rng(17);
  std::map<Rank, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[draw_card(rng).rank];
  const double p = 1.0 / 13.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  REQUIRE(counts.size() == 13);
  for (const auto& [rank, k] : counts) CHECK(std::abs(k - n * p) < 5 * sigma);
}

TEST_CASE("blackjack transition examples") {
  Rng rng(0);
  auto s = bj({c(Rank::kKing), c(Rank::k9)}, c(Rank::k7), c(Rank::k10));
  // Find a draw of a 3 to reproduce K,9,3 -> 22.
  for (std::uint64_t seed = 0;; ++seed) {
    Rng probe(seed);
    if (draw_card(probe).rank == Rank::k3) {
      Rng draw(seed);
      const auto r = blackjack_transition(s, ActionLabel("hit"), draw);
      CHECK(hand_value(r.next.player).total == 22);
      CHECK(r.reward == -1.0);
      CHECK(r.done);
      break;
    }
  }
  const auto push = blackjack_transition(bj({c(Rank::kKing), c(Rank::kQueen)}, c(Rank::k10), c(Rank::kJack)),
                                         ActionLabel("stand"), rng);
  CHECK(push.reward == 0.0);
  CHECK(push.done);

  const auto natural = bj({c(Rank::kAce), c(Rank::kKing)}, c(Rank::k10), c(Rank::k9));
  CHECK(blackjack_transition(natural, ActionLabel("stand"), rng, true).reward == 1.5);
  CHECK(blackjack_transition(natural, ActionLabel("stand"), rng, false).reward == 1.0);
}

TEST_CASE("hand values use the usable-ace rule") {
  CHECK(hand_value(std::vector<Card>{c(Rank::kAce), c(Rank::k6)}).total == 17);
  CHECK(hand_value(std::vector<Card>{c(Rank::kAce), c(Rank::k6)}).usable_ace);
  CHECK(hand_value(std::vector<Card>{c(Rank::kAce), c(Rank::k6), c(Rank::k9)}).total == 16);
  CHECK(hand_value(std::vector<Card>{c(Rank::kAce), c(Rank::kAce)}).total == 12);
  CHECK(is_natural(std::vector<Card>{c(Rank::kAce), c(Rank::kJack)}));
  CHECK_FALSE(is_natural(std::vector<Card>{c(Rank::k7), c(Rank::k7), c(Rank::k7)}));
}

TEST_CASE("dealer finishes at 17 or more after stand") {
  BlackjackEnv env;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    env.reset(seed);
    const auto r = env.step(ActionLabel("stand"));
    const auto& st = std::get<BlackjackState>(r.observation.symbolic);
    std::vector<Card> dealer{st.dealer_up, st.dealer_hole};
    dealer.insert(dealer.end(), st.dealer_drawn.begin(), st.dealer_drawn.end());
    CHECK(hand_value(dealer).total >= 17);
    CHECK(r.observation.text_render.find("??") == std::string::npos);
  }
}

TEST_CASE("Points24 deals are not filtered for solvability") {
  auto env = make_env(TaskId::kPoints24);
  int unsolvable = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto st = std::get<FormulaGameState>(env->reset(seed).symbolic);
    unsolvable += points24_solve(st.values) ? 0 : 1;
  }
  CHECK(unsolvable > 0);
}

TEST_CASE("face mode maps J/Q/K to 11/12/13") {
  auto env = make_env(TaskId::kPoints24, EnvOptions{5, FaceMode::kFace, false});
  CHECK(env->action_space().size() == 13 + 6 + 1);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto st = std::get<FormulaGameState>(env->reset(seed).symbolic);
    for (std::size_t i = 0; i < st.cards.size(); ++i) CHECK(st.values[i] == card_value(st.cards[i], FaceMode::kFace));
  }
}
