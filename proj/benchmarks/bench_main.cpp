#include <benchmark/benchmark.h>

#include <memory>

#include "cotrl/features.hpp"
#include "cotrl/formula.hpp"
#include "cotrl/oracles.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/rl.hpp"
#include "cotrl/sft.hpp"

using namespace cotrl;

namespace {

struct Fixture {
  Vocabulary vocab = Vocabulary::for_task(TaskId::kBlackjack);
  PolicyParams params;
  std::vector<SftExample> data;
  Fixture() {
    params = PolicyParams::init({vocab.size(), 64, feature_dim(TaskId::kBlackjack), 64}, 1);
    data = generate_dataset(TaskId::kBlackjack, {}, 64, true, 1, vocab);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_ScoreUtterance(benchmark::State& state) {
  auto& f = fixture();
  const auto& ex = f.data[0];
  for (auto _ : state) benchmark::DoNotOptimize(score_utterance(f.params, ex.features, ex.response_tokens));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ex.response_tokens.size()));
}
BENCHMARK(BM_ScoreUtterance);

void BM_Backward(benchmark::State& state) {
  auto& f = fixture();
  const auto& ex = f.data[0];
  const auto seg = segment_utterance(ex.response_tokens, f.vocab);
  std::vector<double> grad(f.params.size());
  BackwardTerms terms;
  terms.policy = 1.0;
  terms.value_weight = 0.5;
  terms.entropy = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(backward(f.params, ex.features, ex.response_tokens, seg, terms, grad));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ex.response_tokens.size()));
}
BENCHMARK(BM_Backward);

void BM_SampleUtterance(benchmark::State& state) {
  auto& f = fixture();
  Rng rng(3);
  SampleOptions o;
  o.max_tokens = 64;
  for (auto _ : state) benchmark::DoNotOptimize(sample_utterance(f.params, f.vocab, f.data[0].features, rng, o));
}
BENCHMARK(BM_SampleUtterance);

void BM_ParseAction(benchmark::State& state) {
  const auto space = make_actions({"stand", "hit"});
  const std::string text = fixture().data[0].response;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(parse_action(text, space, rng));
}
BENCHMARK(BM_ParseAction);

void BM_Points24Solve(benchmark::State& state) {
  const std::vector<int> hard{1, 5, 5, 5};
  for (auto _ : state) benchmark::DoNotOptimize(points24_solve(hard));
}
BENCHMARK(BM_Points24Solve);

void BM_EvalFormula(benchmark::State& state) {
  const Formula f{"(", "10", "-", "4", ")", "*", "(", "7", "/", "2", ")"};
  for (auto _ : state) benchmark::DoNotOptimize(eval_formula(f));
}
BENCHMARK(BM_EvalFormula);

void BM_BlackjackValueIteration(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(blackjack_optimal_value(false));
}
BENCHMARK(BM_BlackjackValueIteration);

void BM_Gae(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> r(n, 0.1), v(n, 0.2);
  auto dones = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) dones[i] = i % 7 == 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_gae(r, v, std::span<const bool>(dones.get(), n), 0.0, 0.99, 0.95));
  }
}
BENCHMARK(BM_Gae)->Arg(512)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
