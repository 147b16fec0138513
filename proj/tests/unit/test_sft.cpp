#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cotrl/checkpoint.hpp"
#include "cotrl/features.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/rl.hpp"
#include "cotrl/sft.hpp"

using namespace cotrl;

namespace {

constexpr TaskId kTasks[] = {TaskId::kNumberLine, TaskId::kEzPoints, TaskId::kPoints24, TaskId::kBlackjack};

std::string dump(std::span<const SftExample> ex) {
  std::ostringstream os;
  write_dataset(os, ex);
  return os.str();
}

PolicyParams fresh(TaskId t, const Vocabulary& v, int d = 32) {
  return PolicyParams::init({v.size(), d, feature_dim(t), 16}, 1);
}

}  // namespace

TEST_CASE("dataset examples follow the templates") {
  const auto nl_vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const auto nl = generate_dataset(TaskId::kNumberLine, {}, 600, true, 3, nl_vocab);
  bool seen = false;
  for (const auto& ex : nl) {
    if (ex.response.find("\"current number\": \"0\"") != std::string::npos &&
        ex.response.find("\"target number\": \"3\"") != std::string::npos) {
      seen = true;
      CHECK(ex.action.text() == "+");
    }
  }
  CHECK(seen);

  const auto bj_vocab = Vocabulary::for_task(TaskId::kBlackjack);
  const auto bj = generate_dataset(TaskId::kBlackjack, {}, 3000, true, 3, bj_vocab);
  seen = false;
  for (const auto& ex : bj) {
    if (ex.response.find("I have 13 points and the dealer has 8 points") != std::string::npos) {
      seen = true;
      CHECK(ex.action.text() == "hit");
    }
  }
  CHECK(seen);

  for (const auto& ex : generate_dataset(TaskId::kNumberLine, {}, 50, false, 3, nl_vocab)) {
    CHECK(ex.response == "{\n\"action\": \"" + ex.action.text() + "\"\n}");
  }
}

TEST_CASE("every generated response parses to its label and segments") {
  for (auto t : kTasks) {
    const auto vocab = Vocabulary::for_task(t);
    auto env = make_env(t);
    const auto space = env->action_space();
    for (bool cot : {true, false}) {
      const auto data = generate_dataset(t, {}, 300, cot, 11, vocab);
      CHECK(data.size() == 300);
      for (const auto& ex : data) {
        Rng rng(0);
        const auto parsed = parse_action(ex.response, space, rng);
        CHECK_FALSE(parsed.fallback);
        CHECK(parsed.action == ex.action);
        REQUIRE(ex.response_tokens.back() == Vocabulary::kEos);
        CHECK(vocab.decode(ex.response_tokens) == ex.response);
        const auto seg = segment_utterance(ex.response_tokens, vocab);
        CHECK_FALSE(seg.act.empty());
        if (cot) CHECK_FALSE(seg.tht.empty());
        CHECK(static_cast<int>(ex.features.size()) == feature_dim(t));
      }
    }
  }
}

TEST_CASE("datasets are byte-identical for the same seed") {
  for (auto t : kTasks) {
    const auto vocab = Vocabulary::for_task(t);
    const auto a = generate_dataset(t, {}, 200, true, 42, vocab);
    const auto b = generate_dataset(t, {}, 200, true, 42, vocab);
    CHECK(dump(a) == dump(b));
    CHECK(dump(a) != dump(generate_dataset(t, {}, 200, true, 43, vocab)));
  }
}

TEST_CASE("dataset file round trip") {
  const auto vocab = Vocabulary::for_task(TaskId::kPoints24);
  const auto a = generate_dataset(TaskId::kPoints24, {}, 40, true, 5, vocab);
  const auto path = std::filesystem::temp_directory_path() / "cotrl_test_sft.jsonl";
  write_dataset(path, a);
  const auto b = read_dataset(path, vocab);
  std::filesystem::remove(path);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].prompt == a[i].prompt);
    CHECK(b[i].response_tokens == a[i].response_tokens);
    CHECK(b[i].features == a[i].features);
    CHECK(b[i].action == a[i].action);
  }
}

TEST_CASE("holdout split") {
  CHECK(holdout_begin(5000) == 4900);
  CHECK(holdout_begin(10) == 9);
  CHECK(holdout_begin(2) == 1);
}

TEST_CASE("loss on one repeated example decreases over the first steps") {
  const auto vocab = Vocabulary::for_task(TaskId::kBlackjack);
  const auto one = generate_dataset(TaskId::kBlackjack, {}, 1, true, 2, vocab);
  const std::vector<SftExample> data(32, one[0]);
  auto p = fresh(TaskId::kBlackjack, vocab);
  Rng rng(1);
  SftOptions o;
  o.epochs = 10;
  o.lr = 1e-3;
  o.minibatch = 32;
  const auto report = train_sft(p, data, o, rng);
  REQUIRE(report.losses.size() == 10);
  for (std::size_t i = 1; i < report.losses.size(); ++i) CHECK(report.losses[i] < report.losses[i - 1]);
  CHECK(sft_loss(p, data) < report.losses.front());
}

TEST_CASE("lr = 0 leaves parameters unchanged") {
  const auto vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const auto data = generate_dataset(TaskId::kNumberLine, {}, 64, true, 2, vocab);
  auto p = fresh(TaskId::kNumberLine, vocab);
  const auto before = p.data();
  Rng rng(1);
  SftOptions o;
  o.lr = 0.0;
  train_sft(p, data, o, rng);
  CHECK(p.data() == before);
}

TEST_CASE("SFT on NumberLine reproduces the oracle on held-out states") {
  const auto vocab = Vocabulary::for_task(TaskId::kNumberLine);
  const auto train = generate_dataset(TaskId::kNumberLine, {}, 5000, true, 2, vocab);
  const auto held = generate_dataset(TaskId::kNumberLine, {}, 100, true, 777, vocab);
  auto p = PolicyParams::init({vocab.size(), 64, feature_dim(TaskId::kNumberLine), 64}, 1);
  Rng rng(3);
  SftOptions o;
  o.lr = TrainConfig{}.sft_lr;
  train_sft(p, train, o, rng);
  const double acc = action_accuracy(p, vocab, held);
  MESSAGE("held-out action accuracy " << acc);
  CHECK(acc >= 0.95);
}

TEST_CASE("prepare_policy") {
  TrainConfig c;
  c.embed_dim = 8;
  c.value_hidden = 4;
  c.sft_examples = 100;
  const auto vocab = Vocabulary::for_task(c.task_id());
  const auto s = prepare_policy(c, vocab);
  CHECK(s.sft_examples == 98);
  CHECK(s.holdout_accuracy.has_value());
  CHECK_FALSE(s.sft_losses.empty());

  const auto path = std::filesystem::temp_directory_path() / "cotrl_test_prep.bin";
  save_checkpoint(path, s.params, vocab, c.task);
  TrainConfig d = c;
  d.init_checkpoint = path.string();
  CHECK(prepare_policy(d, vocab).params.data() == s.params.data());
  d.embed_dim = 9;
  CHECK_THROWS_AS(prepare_policy(d, vocab), ConfigError);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}
