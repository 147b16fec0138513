#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

/// Invalid or unknown configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every hyperparameter of SFT and RL training. Defaults are desk-scale; see
/// docs/config.md for the schema and the large-model preset.
struct TrainConfig {
  std::string task = "numberline";
  bool cot = true;

  // Environment
  int n_max = 5;
  bool face_values = false;
  bool natural_bonus = false;

  // Policy
  int embed_dim = 64;
  int value_hidden = 64;
  double init_scale = 0.08;
  std::string init_checkpoint;  // empty: start from random init (or SFT below)

  // RL
  double lambda_cot = 0.5;  // working range 0.2-0.5
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int ppo_epochs = 4;
  int buffer_size = 512;
  int minibatch_size = 128;
  double lr_init = 3e-3;
  double lr_final = 3e-6;
  int lr_max_steps = 200;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 1.0;
  bool normalize_advantages = true;
  double temperature = 1.0;
  int max_tokens = 128;
  bool constrained_decoding = false;
  std::int64_t total_env_steps = 50000;
  /// Stop once an evaluation reaches this success rate; 0 disables.
  double stop_success_rate = 0.0;

  // Evaluation after every PPO update
  int eval_episodes = 0;  // 0: 200, or 1000 for Blackjack
  bool eval_greedy = true;

  // SFT
  int sft_examples = 5000;
  int sft_epochs = 1;
  double sft_lr = 1e-2;
  int sft_minibatch = 32;

  // Seeds
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 12345;

  /// "rollouts" writes every training transition, "eval" only evaluation
  /// episodes, "none" nothing.
  std::string trajectories = "rollouts";

  TaskId task_id() const;
  EnvOptions env_options() const;
  int resolved_eval_episodes() const;

  /// Throws ConfigError describing the first violated range.
  void validate() const;
};

/// Parses JSON; unknown keys and out-of-range values raise ConfigError.
TrainConfig parse_config(const std::string& json_text);
TrainConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every field.
std::string serialize_config(const TrainConfig& config);

/// Learning rate after `step` PPO updates: cosine decay from lr_init to
/// lr_final over max_steps, then flat.
double cosine_lr(long step, double lr_init, double lr_final, long max_steps);

}  // namespace cotrl
