#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "cotrl/checkpoint.hpp"
#include "cotrl/features.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/sft.hpp"
#include "cotrl/vocab.hpp"

using namespace cotrl;

namespace {

constexpr TaskId kTasks[] = {TaskId::kNumberLine, TaskId::kEzPoints, TaskId::kPoints24, TaskId::kBlackjack};

std::vector<double> random_feats(Rng& rng, int k) {
  std::vector<double> f(k);
  for (auto& x : f) x = rng.uniform() < 0.3 ? 1.0 : 0.0;
  return f;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Objective recomputed from the public forward functions only.
double objective(const PolicyParams& p, std::span<const double> f, const std::vector<int>& toks, const Segmentation& seg,
                 const BackwardTerms& t) {
  const auto lp = score_utterance(p, f, toks);
  double tht = 0.0, act = 0.0, ent = 0.0;
  for (int i = 0; i < static_cast<int>(toks.size()); ++i) {
    if (seg.tht.contains(i)) tht += lp[i];
    if (seg.act.contains(i)) act += lp[i];
    const auto next = next_token_logprobs(p, f, std::span<const int>(toks).first(i));
    for (double l : next) ent -= std::exp(l) * l;
  }
  ent /= static_cast<double>(toks.size());
  const double v = value(p, f);
  const double pol = t.all_tokens ? sum(lp) : t.lambda * tht + act;
  return t.policy * pol - t.value_weight * (v - t.target_value) * (v - t.target_value) + t.entropy * ent;
}

}  // namespace

TEST_CASE("vocabularies are bijective and cover prompts and responses") {
  for (auto t : kTasks) {
    const auto v = Vocabulary::for_task(t);
    CHECK(v.size() >= 40);
    CHECK(v.size() <= 160);
    for (int i = 0; i < v.size(); ++i) CHECK(v.find(v.name(i)).value_or(-1) == (i < 2 ? -1 : i));
    auto env = make_env(t);
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto obs = env->reset(s);
      for (bool cot : {true, false}) CHECK(v.try_encode(build_prompt(obs, cot)));
    }
    for (bool cot : {true, false}) {
      for (const auto& ex : generate_dataset(t, {}, 200, cot, 1, v)) CHECK(v.decode(ex.response_tokens) == ex.response);
    }
    CHECK_THROWS_AS(v.encode("\xe2\x9a\xa1"), UsageError);
  }
}

TEST_CASE("split_pieces keeps keys and structural runs whole") {
  const auto p = split_pieces("{\n\"action\": \"hit\"\n}");
  CHECK(p == std::vector<std::string>{"{\n", "\"action\"", ": \"", "hit", "\"\n}"});
  CHECK(split_pieces(" 10 apples") == std::vector<std::string>{" 10", " apples"});
  CHECK(split_pieces("a  b") == std::vector<std::string>{"a", " ", " b"});
}

TEST_CASE("sampling determinism, greedy limit and recorded log-probs") {
  const auto vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const PolicyDims dims{vocab.size(), 16, feature_dim(TaskId::kNumberLine), 8};
  const auto p = PolicyParams::init(dims, 3, 0.3);
  Rng fr(1);
  const auto f = random_feats(fr, dims.features);
  SampleOptions so;
  so.max_tokens = 30;
  Rng a(5), b(5);
  const auto u1 = sample_utterance(p, vocab, f, a, so);
  const auto u2 = sample_utterance(p, vocab, f, b, so);
  CHECK(u1.tokens == u2.tokens);
  CHECK(u1.text == vocab.decode(u1.tokens));

  const auto scored = score_utterance(p, f, u1.tokens);
  REQUIRE(scored.size() == u1.token_logps.size());
  for (std::size_t i = 0; i < scored.size(); ++i) CHECK(std::abs(scored[i] - u1.token_logps[i]) < 1e-10);

  SampleOptions greedy = so;
  greedy.greedy = true;
  SampleOptions cold = so;
  cold.temperature = 1e-4;
  Rng c(9), d(10);
  CHECK(sample_utterance(p, vocab, f, c, greedy).tokens == sample_utterance(p, vocab, f, d, cold).tokens);

  const auto first = next_token_logprobs(p, f, {});
  double total = 0.0;
  for (double l : first) total += std::exp(l);
  CHECK(std::abs(total - 1.0) < 1e-12);
  for (int v = 0; v < vocab.size(); ++v) {
    const std::vector<int> one{v};
    CHECK(score_utterance(p, f, one)[0] == doctest::Approx(first[v]).epsilon(1e-12));
  }
}

TEST_CASE("sampling truncates at max_tokens") {
  const auto vocab = Vocabulary::for_task(TaskId::kBlackjack);
  const PolicyDims dims{vocab.size(), 8, feature_dim(TaskId::kBlackjack), 4};
  const auto p = PolicyParams::init(dims, 1, 0.01);
  Rng rng(2);
  SampleOptions so;
  so.max_tokens = 3;
  const auto u = sample_utterance(p, vocab, std::vector<double>(dims.features, 0.0), rng, so);
  CHECK(u.tokens.size() <= 3);
  if (u.tokens.size() == 3 && u.tokens.back() != Vocabulary::kEos) CHECK(u.truncated);
}

TEST_CASE("first-token sampling frequencies match the softmax") {
  const auto vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const PolicyDims dims{vocab.size(), 8, feature_dim(TaskId::kNumberLine), 4};
  const auto p = PolicyParams::init(dims, 11, 1.0);
  const std::vector<double> f(dims.features, 0.0);
  const auto lp = next_token_logprobs(p, f, {});
  std::vector<int> counts(vocab.size(), 0);
  Rng rng(12);
  SampleOptions so;
  so.max_tokens = 1;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_utterance(p, vocab, f, rng, so).tokens[0]];
  for (int v = 0; v < vocab.size(); ++v) {
    const double q = std::exp(lp[v]);
    const double sigma = std::sqrt(n * q * (1 - q));
    CHECK(std::abs(counts[v] - n * q) <= 4 * sigma + 1.0);
  }
}

TEST_CASE("scaled action log-prob") {
  CHECK(scaled_action_logprob(-9.0, -0.1, 0.0) == doctest::Approx(-0.1));
  CHECK(scaled_action_logprob(-9.0, -0.1, 1.0) == doctest::Approx(-9.1));
  CHECK(scaled_action_logprob(-2.2, 0.0, 0.5) == doctest::Approx(-1.1));
}

TEST_CASE("value head is deterministic and finite") {
  const PolicyDims dims{20, 8, 6, 5};
  const auto p = PolicyParams::init(dims, 4);
  Rng r(1);
  const auto f = random_feats(r, 6);
  CHECK(value(p, f) == value(p, f));
  CHECK(std::isfinite(value(p, f)));
}

TEST_CASE("parameter layout") {
  const PolicyDims dims{10, 4, 3, 2};
  const PolicyParams p(dims);
  const std::size_t expected = 10 * 4 + 3 * 4 + 4 + 16 + 10 * 4 + 10 + 3 * 2 + 2 + 4 + 2 + 2 + 1;
  CHECK(p.size() == expected);
  std::size_t total = 0;
  for (const auto& s : p.slots()) total += s.size();
  CHECK(total == expected);
  const auto q = PolicyParams::init(dims, 7, 0.08);
  for (double x : q.data()) CHECK(std::abs(x) <= 0.08);
  CHECK(q.all_finite());
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(77);
  for (int inst = 0; inst < 8; ++inst) {
    const PolicyDims dims{9, 4, 5, 3};
    auto p = PolicyParams::init(dims, 100 + inst, 0.5);
    const auto f = random_feats(rng, dims.features);
    const int n = 3 + static_cast<int>(rng.uniform_int(6));
    std::vector<int> toks(n);
    for (auto& t : toks) t = static_cast<int>(rng.uniform_int(dims.vocab));
    const int split = 1 + static_cast<int>(rng.uniform_int(n - 1));
    const Segmentation seg{{0, split}, {split, std::min(n, split + 1)}};
    BackwardTerms terms;
    terms.policy = rng.uniform() * 2 - 1;
    terms.lambda = rng.uniform();
    terms.value_weight = rng.uniform();
    terms.target_value = rng.normal();
    terms.entropy = rng.uniform() * 0.5;
    terms.all_tokens = inst % 4 == 3;

    std::vector<double> grad(p.size(), 0.0);
    backward(p, f, toks, seg, terms, grad);
    const double eps = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.data()[i];
      p.data()[i] = orig + eps;
      const double up = objective(p, f, toks, seg, terms);
      p.data()[i] = orig - eps;
      const double down = objective(p, f, toks, seg, terms);
      p.data()[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
      CHECK_MESSAGE(std::abs(numeric - grad[i]) / scale < 1e-4, "coordinate " << i << " analytic " << grad[i]
                                                                              << " numeric " << numeric);
    }
  }
}

TEST_CASE("zero weights give a zero gradient") {
  const PolicyDims dims{9, 4, 5, 3};
  const auto p = PolicyParams::init(dims, 1, 0.5);
  const std::vector<double> f(5, 1.0);
  const std::vector<int> toks{2, 3, 4};
  const double v = value(p, f);
  const auto g = backward(p, f, toks, Segmentation{{0, 2}, {2, 3}}, 0.0, 0.5, v, 1.0);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("lambda = 0 ignores thought tokens") {
  // Tokens after the action position cannot influence the action log-prob,
  // and thought-only output rows receive only the softmax-normalizer share.
  const PolicyDims dims{10, 4, 3, 2};
  const auto p = PolicyParams::init(dims, 5, 0.5);
  const std::vector<double> f{1.0, 0.0, 1.0};
  const std::vector<int> toks{2, 3, 4, 5, 6, 7};  // thought 2,3,4 | action 5 | trailing 6,7
  const Segmentation seg{{0, 3}, {3, 4}};
  const auto g0 = backward(p, f, toks, seg, 1.0, 0.0, 0.0, 0.0);
  const auto g1 = backward(p, f, toks, seg, 1.0, 1.0, 0.0, 0.0);
  const auto& E = p.slot("embed");
  for (int tok : {5, 6, 7}) {
    for (int j = 0; j < dims.embed; ++j) {
      CHECK(g0[E.offset + static_cast<std::size_t>(tok) * dims.embed + j] == 0.0);
    }
  }
  // The thought term moves the embedding of the first thought input.
  double moved = 0.0;
  for (int j = 0; j < dims.embed; ++j) moved += std::abs(g1[E.offset + 2 * dims.embed + j] - g0[E.offset + 2 * dims.embed + j]);
  CHECK(moved > 1e-8);
  // lambda = 0 equals the gradient of the action log-prob alone.
  const auto act_only = backward(p, f, toks, Segmentation{{0, 0}, {3, 4}}, 1.0, 1.0, 0.0, 0.0);
  for (std::size_t i = 0; i < g0.size(); ++i) CHECK(g0[i] == doctest::Approx(act_only[i]).epsilon(1e-12));
}

TEST_CASE("action ranking is lambda-invariant for a fixed thought prefix") {
  const auto vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const PolicyDims dims{vocab.size(), 8, feature_dim(TaskId::kNumberLine), 4};
  const auto p = PolicyParams::init(dims, 8, 0.5);
  const std::vector<double> f(dims.features, 0.5);
  const auto prefix = vocab.encode("{\n\"thoughts\": \"x\",\n\"action\": \"");
  const double tht = sum(score_utterance(p, f, prefix));
  const auto next = next_token_logprobs(p, f, prefix);
  auto ranking = [&](double lambda) {
    std::vector<int> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scaled_action_logprob(tht, next[a], lambda) > scaled_action_logprob(tht, next[b], lambda);
    });
    return order;
  };
  const auto base = ranking(0.0);
  for (double lambda : {0.1, 0.3, 0.5, 0.7, 1.0}) CHECK(ranking(lambda) == base);
}

TEST_CASE("checkpoint round trip") {
  const auto vocab = Vocabulary::for_task(TaskId::kBlackjack);
  const PolicyDims dims{vocab.size(), 6, feature_dim(TaskId::kBlackjack), 4};
  const auto p = PolicyParams::init(dims, 21);
  const auto path = std::filesystem::temp_directory_path() / "cotrl_test_ckpt.bin";
  save_checkpoint(path, p, vocab, "blackjack");
  const auto q = load_checkpoint(path, vocab);
  CHECK(q.dims() == p.dims());
  CHECK(q.data() == p.data());
  CHECK(std::filesystem::exists(path.string() + ".json"));
  CHECK_THROWS_AS(load_checkpoint(path, Vocabulary::for_task(TaskId::kNumberLine)), UsageError);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}

TEST_CASE("features") {
  CHECK(feature_dim(TaskId::kNumberLine) == 12);
  CHECK(feature_dim(TaskId::kBlackjack) == 29);
  for (auto t : kTasks) {
    auto env = make_env(t);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto obs = env->reset(s);
      const auto f = observation_features(obs);
      CHECK(static_cast<int>(f.size()) == feature_dim(t));
      CHECK(f == observation_features(obs));
    }
  }
}
