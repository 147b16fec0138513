#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "cotrl/env.hpp"
#include "cotrl/policy.hpp"

namespace cotrl {

/// What an agent did at one step.
struct Decision {
  ActionLabel action{"x"};
  bool fallback = false;
  std::optional<Utterance> utterance;  // set for text-generating agents
};

/// Chooses an action for an observation; `fallback_rng` is the environment's
/// parser stream.
using Agent = std::function<Decision(const Observation&, Rng& fallback_rng)>;

struct PolicyAgentOptions {
  bool greedy = true;
  double temperature = 1.0;
  int max_tokens = 128;
  std::uint64_t sample_seed = 0;  // used when not greedy
  const TokenMask* mask = nullptr;
};

/// Generates an utterance and parses it. Greedy decisions are memoized per
/// feature vector, which is exact because greedy decoding is a pure function
/// of (params, features).
Agent policy_agent(const PolicyParams& params, const Vocabulary& vocab, const PolicyAgentOptions& options = {});

/// Task oracle (numberline_expert, formula_expert, blackjack_optimal). Formula
/// states without a witness fall back to "=".
Agent oracle_agent(TaskId task);

Agent constant_agent(const ActionLabel& action);

/// Uniform over the legal actions.
Agent random_agent(std::uint64_t seed);

struct EvalMetrics {
  int episodes = 0;
  long steps = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double fallback_rate = 0.0;
};

struct StepRecord {
  int episode = 0;
  int t = 0;
  std::uint64_t env_seed = 0;
  const Observation* observation = nullptr;
  const Decision* decision = nullptr;
  const StepResult* result = nullptr;
};

using StepObserver = std::function<void(const StepRecord&)>;

/// Seed of evaluation episode `i` under `eval_seed`.
std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index);

/// Runs `episodes` episodes with seeds episode_seed(seed, i). Success is the
/// task's success flag on the final transition.
EvalMetrics evaluate(Env& env, const Agent& agent, int episodes, std::uint64_t seed,
                     const StepObserver& observer = {});

EvalMetrics evaluate(Env& env, const PolicyParams& params, const Vocabulary& vocab, int episodes, bool greedy,
                     std::uint64_t seed);

struct LogpDiagnostic {
  int samples = 0;
  double mean_logp_tht = 0.0;
  double mean_logp_act = 0.0;
  double mean_abs_logp_tht = 0.0;
  double mean_abs_logp_act = 0.0;
  double fallback_rate = 0.0;
};

/// Samples `samples` utterances at `temperature` along the policy's own
/// episodes (resets seeded episode_seed(seed, i)) and averages the summed
/// log-probabilities of the thought and action segments.
LogpDiagnostic logp_diagnostic(Env& env, const PolicyParams& params, const Vocabulary& vocab, int samples,
                               std::uint64_t seed, double temperature = 1.0, int max_tokens = 128);

}  // namespace cotrl
