// cotrl: command-line front end for dataset generation, SFT, RL training,
// evaluation and the environment server.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cotrl/checkpoint.hpp"
#include "cotrl/config.hpp"
#include "cotrl/evaluate.hpp"
#include "cotrl/features.hpp"
#include "cotrl/prompting.hpp"
#include "cotrl/rl.hpp"
#include "cotrl/sft.hpp"
#include "cotrl/trajectory.hpp"
#include "cotrl/vocab.hpp"
#include "cotrl/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "runs/latest";
};

cotrl::TrainConfig load(const Globals& g) {
  cotrl::TrainConfig c = g.config_path.empty() ? cotrl::TrainConfig{} : cotrl::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

fs::path prepare_out(const fs::path& dir, const cotrl::TrainConfig& c) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << cotrl::serialize_config(c) << '\n';
  return dir;
}

void print_line(const json& j) { std::cout << j.dump() << std::endl; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Runs PPO from the configured starting point and writes metrics.csv,
// trajectories.jsonl and checkpoint.bin into `dir`.
cotrl::TrainResult run_rl(const cotrl::TrainConfig& c, const fs::path& dir) {
  prepare_out(dir, c);
  const auto task = c.task_id();
  const auto vocab = cotrl::Vocabulary::for_task(task, c.env_options());
  const auto setup = cotrl::prepare_policy(c, vocab);
  auto env = cotrl::make_env(task, c.env_options());

  std::ofstream metrics(dir / "metrics.csv");
  metrics << cotrl::metrics_csv_header() << '\n';
  cotrl::TrajectoryWriter traj(dir / "trajectories.jsonl");
  cotrl::TrainHooks hooks;
  hooks.on_iteration = [&](const cotrl::IterationMetrics& m) {
    metrics << cotrl::metrics_csv_row(m) << '\n' << std::flush;
    std::cerr << "iter " << m.iter << " steps " << m.env_steps << " success " << fmt(m.success_rate) << '\n';
  };
  auto write = [&](const cotrl::TrajectoryRecord& r) { traj.write(r); };
  if (c.trajectories == "rollouts") hooks.on_record = write;
  if (c.trajectories == "eval") hooks.on_eval_record = write;

  auto result = cotrl::train(*env, setup.params, vocab, c, hooks);
  cotrl::save_checkpoint(dir / "checkpoint.bin", result.params, vocab, c.task);
  return result;
}

int cmd_sft_gen(const Globals& g, int examples) {
  const auto c = load(g);
  const fs::path dir = prepare_out(g.out, c);
  const int n = examples > 0 ? examples : c.sft_examples;
  if (n < 1) throw cotrl::ConfigError("sft-gen needs at least one example");
  const auto vocab = cotrl::Vocabulary::for_task(c.task_id(), c.env_options());
  const auto data = cotrl::generate_dataset(c.task_id(), c.env_options(), n, c.cot, cotrl::mix_seed(c.seed, 2), vocab);
  cotrl::write_dataset(dir / "sft.jsonl", data);
  print_line({{"examples", data.size()}, {"path", (dir / "sft.jsonl").string()}});
  return 0;
}

int cmd_sft_train(const Globals& g, const std::string& data_path) {
  auto c = load(g);
  const fs::path dir = prepare_out(g.out, c);
  const auto task = c.task_id();
  const auto vocab = cotrl::Vocabulary::for_task(task, c.env_options());
  std::vector<cotrl::SftExample> data;
  if (data_path.empty()) {
    if (c.sft_examples < 1) throw cotrl::ConfigError("sft_examples must be positive without --data");
    data = cotrl::generate_dataset(task, c.env_options(), c.sft_examples, c.cot, cotrl::mix_seed(c.seed, 2), vocab);
  } else {
    data = cotrl::read_dataset(data_path, vocab);
    if (data.empty()) throw cotrl::ConfigError("dataset is empty: " + data_path);
  }
  const cotrl::PolicyDims dims{vocab.size(), c.embed_dim, cotrl::feature_dim(task, c.env_options()), c.value_hidden};
  auto params = cotrl::PolicyParams::init(dims, cotrl::mix_seed(c.seed, 1), c.init_scale);
  const std::size_t split = cotrl::holdout_begin(data.size());
  const std::span<const cotrl::SftExample> all(data);
  cotrl::SftOptions o;
  o.epochs = c.sft_epochs;
  o.lr = c.sft_lr;
  o.minibatch = c.sft_minibatch;
  o.max_grad_norm = c.max_grad_norm;
  cotrl::Rng rng(cotrl::mix_seed(c.seed, 3));
  std::ofstream metrics(dir / "metrics.csv");
  metrics << "step,loss\n";
  cotrl::train_sft(params, all.first(split), o, rng,
                   [&](long step, double loss) { metrics << step << ',' << fmt(loss) << '\n'; });
  cotrl::save_checkpoint(dir / "checkpoint.bin", params, vocab, c.task);
  const double acc = split < data.size() ? cotrl::action_accuracy(params, vocab, all.subspan(split), c.max_tokens) : 0.0;
  print_line({{"train_examples", split},
              {"holdout_examples", data.size() - split},
              {"holdout_action_accuracy", acc},
              {"checkpoint", (dir / "checkpoint.bin").string()}});
  return 0;
}

int cmd_rl_train(const Globals& g) {
  const auto c = load(g);
  const auto result = run_rl(c, g.out);
  const auto& last = result.metrics.empty() ? cotrl::IterationMetrics{} : result.metrics.back();
  print_line({{"iterations", result.metrics.size()},
              {"env_steps", result.env_steps},
              {"peak_success_rate", result.peak_success_rate},
              {"final_success_rate", last.success_rate}});
  return 0;
}

int cmd_eval(const Globals& g, int episodes) {
  const auto c = load(g);
  const fs::path dir = prepare_out(g.out, c);
  const auto task = c.task_id();
  const auto vocab = cotrl::Vocabulary::for_task(task, c.env_options());
  const auto setup = cotrl::prepare_policy(c, vocab);
  auto env = cotrl::make_env(task, c.env_options());
  const int n = episodes > 0 ? episodes : c.resolved_eval_episodes();

  cotrl::PolicyAgentOptions ao;
  ao.greedy = c.eval_greedy;
  ao.temperature = c.temperature;
  ao.max_tokens = c.max_tokens;
  ao.sample_seed = cotrl::mix_seed(c.eval_seed, 0);
  cotrl::TrajectoryWriter traj(dir / "trajectories.jsonl");
  const auto observer = [&](const cotrl::StepRecord& s) {
    cotrl::TrajectoryRecord r;
    r.run_id = "eval";
    r.episode = s.episode;
    r.t = s.t;
    r.task = c.task;
    r.env_seed = s.env_seed;
    r.obs_text = s.observation->text_render;
    r.prompt = cotrl::build_prompt(*s.observation, c.cot);
    r.parsed_action = s.decision->action.text();
    r.fallback = s.decision->fallback;
    r.reward = s.result->reward;
    r.done = s.result->done;
    if (s.decision->utterance) {
      r.utterance_text = s.decision->utterance->text;
      r.logp_tht = s.decision->utterance->logp_tht();
      r.logp_act = s.decision->utterance->logp_act();
      r.logp_scaled = cotrl::scaled_action_logprob(r.logp_tht, r.logp_act, c.lambda_cot);
    }
    r.value_pred = cotrl::value(setup.params, cotrl::observation_features(*s.observation));
    traj.write(r);
  };
  const auto m = cotrl::evaluate(*env, cotrl::policy_agent(setup.params, vocab, ao), n, c.eval_seed, observer);
  std::ofstream(dir / "metrics.csv") << "episodes,steps,success_rate,mean_return,fallback_rate\n"
                                     << m.episodes << ',' << m.steps << ',' << fmt(m.success_rate) << ','
                                     << fmt(m.mean_return) << ',' << fmt(m.fallback_rate) << '\n';
  std::cout << "success_rate=" << fmt(m.success_rate) << " episodes=" << m.episodes
            << " mean_return=" << fmt(m.mean_return) << " fallback_rate=" << fmt(m.fallback_rate) << std::endl;
  return 0;
}

int cmd_sweep(const Globals& g, const std::vector<double>& lambdas) {
  const auto base = load(g);
  const fs::path dir = prepare_out(g.out, base);
  std::ofstream sweep(dir / "sweep.csv");
  sweep << "lambda_cot," << cotrl::metrics_csv_header() << '\n';
  json summary = json::array();
  for (double lambda : lambdas) {
    auto c = base;
    c.lambda_cot = lambda;
    c.validate();
    const auto result = run_rl(c, dir / ("lambda_" + fmt(lambda)));
    for (const auto& m : result.metrics) sweep << fmt(lambda) << ',' << cotrl::metrics_csv_row(m) << '\n';
    sweep.flush();
    summary.push_back({{"lambda_cot", lambda}, {"peak_success_rate", result.peak_success_rate}});
  }
  print_line({{"sweep", summary}, {"path", (dir / "sweep.csv").string()}});
  return 0;
}

int cmd_diag(const Globals& g, int samples) {
  const auto c = load(g);
  const fs::path dir = prepare_out(g.out, c);
  const auto task = c.task_id();
  const auto vocab = cotrl::Vocabulary::for_task(task, c.env_options());
  const auto setup = cotrl::prepare_policy(c, vocab);
  auto env = cotrl::make_env(task, c.env_options());
  const auto d = cotrl::logp_diagnostic(*env, setup.params, vocab, samples, c.eval_seed, c.temperature, c.max_tokens);
  std::ofstream(dir / "metrics.csv") << "task,samples,mean_logp_tht,mean_logp_act,mean_abs_logp_tht,mean_abs_logp_act\n"
                                     << c.task << ',' << d.samples << ',' << fmt(d.mean_logp_tht) << ','
                                     << fmt(d.mean_logp_act) << ',' << fmt(d.mean_abs_logp_tht) << ','
                                     << fmt(d.mean_abs_logp_act) << '\n';
  print_line({{"task", c.task},
              {"samples", d.samples},
              {"mean_logp_tht", d.mean_logp_tht},
              {"mean_logp_act", d.mean_logp_act},
              {"mean_abs_logp_tht", d.mean_abs_logp_tht},
              {"mean_abs_logp_act", d.mean_abs_logp_act}});
  return 0;
}

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump(-1, ' ', false, json::error_handler_t::replace)
            << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate text-generating policies on card and number-line tasks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  int examples = 0;
  auto* sft_gen = app.add_subcommand("sft-gen", "Write an oracle instruction dataset as JSON lines");
  sft_gen->add_option("--examples", examples, "Number of examples (default: sft_examples)");
  sft_gen->fallthrough();

  std::string data_path;
  auto* sft_train = app.add_subcommand("sft-train", "Supervised fine-tuning on oracle data");
  sft_train->add_option("--data", data_path, "Dataset from sft-gen (default: generate)")->check(CLI::ExistingFile);
  sft_train->fallthrough();

  auto* rl_train = app.add_subcommand("rl-train", "PPO on the token policy");
  rl_train->fallthrough();

  int episodes = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a policy");
  eval->add_option("--episodes", episodes, "Episode count (default: per task)");
  eval->fallthrough();

  std::optional<int> port;
  auto* serve = app.add_subcommand("serve", "Newline-delimited JSON environment server (stdio or TCP)");
  serve->add_option("--port", port, "Listen on 127.0.0.1:PORT instead of stdio")->check(CLI::Range(0, 65535));
  serve->fallthrough();

  std::vector<double> lambdas{0.0, 0.1, 0.3, 0.5, 0.7, 1.0};
  auto* sweep = app.add_subcommand("sweep-lambda", "RL runs over a grid of thought scaling factors");
  sweep->add_option("--lambdas", lambdas, "Values of lambda_cot")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sweep->fallthrough();

  int samples = 1000;
  auto* diag = app.add_subcommand("diag-logp", "Mean summed log-probability of thought vs action tokens");
  diag->add_option("--samples", samples, "Sampled utterances")->check(CLI::PositiveNumber)->capture_default_str();
  diag->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  try {
    if (*sft_gen) return cmd_sft_gen(g, examples);
    if (*sft_train) return cmd_sft_train(g, data_path);
    if (*rl_train) return cmd_rl_train(g);
    if (*eval) return cmd_eval(g, episodes);
    if (*serve) {
      if (port) {
        cotrl::serve_tcp(static_cast<std::uint16_t>(*port), 0,
                         [](std::uint16_t p) { std::cerr << "listening on 127.0.0.1:" << p << std::endl; });
      } else {
        cotrl::serve_stream(std::cin, std::cout);
      }
      return 0;
    }
    if (*sweep) return cmd_sweep(g, lambdas);
    if (*diag) return cmd_diag(g, samples);
  } catch (const cotrl::ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what());
  }
  return 1;
}
