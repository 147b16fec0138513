#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotrl/config.hpp"
#include "cotrl/env.hpp"
#include "cotrl/optim.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/trajectory.hpp"

namespace cotrl {

/// One buffer row: what was seen, said, executed and earned.
struct Transition {
  std::vector<double> feats;
  std::vector<int> tokens;
  Segmentation seg;
  ActionLabel action{"x"};
  bool fallback = false;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  double logp_tht = 0.0;
  double logp_act = 0.0;
  double logp_scaled_old = 0.0;
  double value_old = 0.0;
  double advantage = 0.0;
  double ret = 0.0;

  // Logging only.
  long episode = 0;
  int t = 0;
  std::uint64_t env_seed = 0;
  std::string obs_text;
  std::string prompt;
  std::string utterance_text;
};

struct RolloutBuffer {
  std::vector<Transition> transitions;
  /// V(s) of the observation after the last transition when that episode was
  /// cut by the buffer; 0 when the last transition ended its episode.
  double bootstrap_value = 0.0;
  int episodes_completed = 0;
  int episodes_succeeded = 0;
  double completed_return = 0.0;
};

/// Episode numbering and seeding shared across collections.
struct RolloutCursor {
  std::uint64_t seed_base = 0;
  long next_episode = 0;
};

/// Rollout collection. Resets the environment at the start, then builds
/// the prompt, samples, parses, steps and stores until exactly
/// config.buffer_size transitions are collected.
RolloutBuffer collect_rollouts(Env& env, const PolicyParams& params, const Vocabulary& vocab,
                               const TrainConfig& config, Rng& rng, RolloutCursor& cursor,
                               const TokenMask* mask = nullptr);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                      double bootstrap_value, double gamma, double gae_lambda);

/// Fills advantage/ret in the buffer from compute_gae.
void apply_gae(RolloutBuffer& buffer, double gamma, double gae_lambda);

/// Shifts and scales to mean 0 and (population) standard deviation 1.
void normalize_advantages(std::span<double> advantages);

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)
double clipped_objective(double ratio, double advantage, double eps);

/// Loss was NaN or infinite; parameters were restored.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PpoStats {
  double policy_loss = 0.0;  // -mean clipped objective
  double value_loss = 0.0;   // mean squared error
  double entropy = 0.0;      // mean next-token entropy
  double clip_fraction = 0.0;
  double first_batch_max_ratio_error = 0.0;  // max |rho - 1| on the first minibatch
  int optimizer_steps = 0;
};

/// Per-item trace hook: (ratio, advantage, realized objective term).
using PpoItemObserver = std::function<void(double, double, double)>;

/// Clipped PPO over shuffled minibatches for config.ppo_epochs epochs.
PpoStats ppo_update(PolicyParams& params, Adam& optimizer, const RolloutBuffer& buffer, const TrainConfig& config,
                    double lr, Rng& rng, const PpoItemObserver& observer = {});

struct IterationMetrics {
  int iter = 0;
  long env_steps = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double fallback_rate = 0.0;
  double mean_abs_logp_tht = 0.0;
  double mean_abs_logp_act = 0.0;
  double lr = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);

struct TrainHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
  /// Called for every rollout transition (after collection).
  std::function<void(const TrajectoryRecord&)> on_record;
  /// Called for every evaluation step.
  std::function<void(const TrajectoryRecord&)> on_eval_record;
};

struct TrainResult {
  PolicyParams params;
  std::vector<IterationMetrics> metrics;
  double peak_success_rate = 0.0;
  long env_steps = 0;
};

/// Outer loop: collect, GAE, PPO, cosine LR step; evaluates after every
/// update on a fixed seed set.
TrainResult train(Env& env, const PolicyParams& initial, const Vocabulary& vocab, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace cotrl
