#include "cotrl/sft.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cotrl/checkpoint.hpp"
#include "cotrl/features.hpp"
#include "cotrl/oracles.hpp"
#include "cotrl/optim.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/rl.hpp"

namespace cotrl {

namespace {

using nlohmann::json;

std::optional<ActionLabel> oracle_action(const Observation& obs, std::optional<Formula>& plan) {
  plan.reset();
  switch (obs.task) {
    case TaskId::kNumberLine:
      return numberline_expert(std::get<NumberLineState>(obs.symbolic));
    case TaskId::kBlackjack:
      return blackjack_optimal(abstract_state(std::get<BlackjackState>(obs.symbolic)));
    case TaskId::kEzPoints:
    case TaskId::kPoints24: {
      const auto& s = std::get<FormulaGameState>(obs.symbolic);
      plan = formula_plan(s);
      if (!plan) return std::nullopt;
      return formula_expert(s);
    }
  }
  return std::nullopt;
}

std::vector<int> response_ids(const Vocabulary& vocab, const std::string& response) {
  auto ids = vocab.encode(response);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

}  // namespace

std::vector<SftExample> generate_dataset(TaskId task, const EnvOptions& options, int n, bool cot,
                                         std::uint64_t seed, const Vocabulary& vocab) {
  if (n < 1) throw UsageError("generate_dataset needs n >= 1");
  auto env = make_env(task, options);
  std::vector<SftExample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t e = 0; static_cast<int>(out.size()) < n; ++e) {
    Observation obs = env->reset(mix_seed(seed, e));
    while (!env->done() && static_cast<int>(out.size()) < n) {
      std::optional<Formula> plan;
      const auto action = oracle_action(obs, plan);
      if (!action) break;
      SftExample ex;
      ex.task = task;
      ex.cot = cot;
      ex.prompt = build_prompt(obs, cot);
      ex.response = build_response(obs, *action, cot, plan ? &*plan : nullptr);
      ex.response_tokens = response_ids(vocab, ex.response);
      ex.features = observation_features(obs);
      ex.action = *action;
      out.push_back(std::move(ex));
      obs = env->step(*action).observation;
    }
  }
  return out;
}

void write_dataset(std::ostream& out, std::span<const SftExample> examples) {
  for (const auto& ex : examples) {
    json j;
    j["task"] = std::string(task_name(ex.task));
    j["cot"] = ex.cot;
    j["prompt"] = ex.prompt;
    j["response"] = ex.response;
    j["action"] = ex.action.text();
    j["features"] = ex.features;
    out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, std::span<const SftExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, examples);
}

std::vector<SftExample> read_dataset(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<SftExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      SftExample ex;
      const auto task = parse_task(j.at("task").get<std::string>());
      if (!task) throw std::runtime_error("unknown task");
      ex.task = *task;
      ex.cot = j.at("cot").get<bool>();
      ex.prompt = j.at("prompt").get<std::string>();
      ex.response = j.at("response").get<std::string>();
      ex.action = ActionLabel(j.at("action").get<std::string>());
      ex.features = j.at("features").get<std::vector<double>>();
      ex.response_tokens = response_ids(vocab, ex.response);
      out.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::size_t holdout_begin(std::size_t n) {
  if (n < 2) return n;
  const std::size_t held = std::max<std::size_t>(1, n / 50);
  return n - held;
}

SftReport train_sft(PolicyParams& params, std::span<const SftExample> dataset, const SftOptions& options, Rng& rng,
                    const std::function<void(long, double)>& on_step) {
  if (dataset.empty()) throw UsageError("train_sft needs a nonempty dataset");
  SftReport report;
  const std::vector<double> snapshot = params.data();
  Adam optimizer(params.size());
  std::vector<double> grad(params.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mb = static_cast<std::size_t>(std::max(1, options.minibatch));
  long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      double count = 0.0;
      for (std::size_t k = start; k < end; ++k) count += static_cast<double>(dataset[order[k]].response_tokens.size());
      std::fill(grad.begin(), grad.end(), 0.0);
      double logp = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = dataset[order[k]];
        BackwardTerms terms;
        terms.policy = 1.0 / count;
        terms.all_tokens = true;
        logp += backward(params, ex.features, ex.response_tokens, Segmentation{}, terms, grad).logp_all;
      }
      const double loss = -logp / count;
      bool finite = std::isfinite(loss);
      for (double g : grad) finite = finite && std::isfinite(g);
      if (!finite) {
        params.data() = snapshot;
        throw NonFiniteLoss("non-finite SFT loss at step " + std::to_string(step) + "; parameters restored");
      }
      for (double& g : grad) g = -g;
      clip_grad_norm(grad, options.max_grad_norm);
      optimizer.step(params.data(), grad, options.lr);
      report.losses.push_back(loss);
      report.tokens += static_cast<long>(count);
      if (on_step) on_step(step, loss);
      ++step;
    }
  }
  return report;
}

double sft_loss(const PolicyParams& params, std::span<const SftExample> dataset) {
  double logp = 0.0;
  double count = 0.0;
  for (const auto& ex : dataset) {
    const auto lp = score_utterance(params, ex.features, ex.response_tokens);
    logp += std::accumulate(lp.begin(), lp.end(), 0.0);
    count += static_cast<double>(lp.size());
  }
  return count > 0.0 ? -logp / count : 0.0;
}

double action_accuracy(const PolicyParams& params, const Vocabulary& vocab, std::span<const SftExample> examples,
                       int max_tokens) {
  if (examples.empty()) return 0.0;
  Rng rng(0);
  SampleOptions so;
  so.greedy = true;
  so.max_tokens = max_tokens;
  int hits = 0;
  for (const auto& ex : examples) {
    const auto u = sample_utterance(params, vocab, ex.features, rng, so);
    const auto span = find_action_value(u.text);
    if (!span) continue;
    const auto text = normalize_action_text(std::string_view(u.text).substr(span->value_begin,
                                                                              span->value_end - span->value_begin));
    hits += text == ex.action.text() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

PolicySetup prepare_policy(const TrainConfig& config, const Vocabulary& vocab) {
  const TaskId task = config.task_id();
  const PolicyDims dims{vocab.size(), config.embed_dim, feature_dim(task, config.env_options()), config.value_hidden};
  PolicySetup setup;
  if (!config.init_checkpoint.empty()) {
    setup.params = load_checkpoint(config.init_checkpoint, vocab);
    if (!(setup.params.dims() == dims)) throw ConfigError("init_checkpoint dimensions do not match the config");
    return setup;
  }
  setup.params = PolicyParams::init(dims, mix_seed(config.seed, 1), config.init_scale);
  if (config.sft_examples == 0 || config.sft_epochs == 0) return setup;

  const auto data =
      generate_dataset(task, config.env_options(), config.sft_examples, config.cot, mix_seed(config.seed, 2), vocab);
  const std::size_t split = holdout_begin(data.size());
  const std::span<const SftExample> all(data);
  SftOptions o;
  o.epochs = config.sft_epochs;
  o.lr = config.sft_lr;
  o.minibatch = config.sft_minibatch;
  o.max_grad_norm = config.max_grad_norm;
  Rng rng(mix_seed(config.seed, 3));
  setup.sft_losses = train_sft(setup.params, all.first(split), o, rng).losses;
  setup.sft_examples = split;
  if (split < data.size()) setup.holdout_accuracy = action_accuracy(setup.params, vocab, all.subspan(split), config.max_tokens);
  return setup;
}

TokenMask response_grammar(TaskId task, const Vocabulary& vocab, const EnvOptions& options, bool cot) {
  const auto data = generate_dataset(task, options, 4000, cot, 0x6772616d, vocab);
  std::vector<std::vector<int>> seqs;
  seqs.reserve(data.size());
  for (const auto& ex : data) seqs.push_back(ex.response_tokens);
  return TokenMask(vocab.size(), seqs);
}

}  // namespace cotrl
