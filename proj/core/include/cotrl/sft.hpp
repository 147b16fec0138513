#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotrl/config.hpp"
#include "cotrl/env.hpp"
#include "cotrl/policy.hpp"
#include "cotrl/vocab.hpp"

namespace cotrl {

/// One oracle-labelled (prompt, response) pair.
struct SftExample {
  TaskId task = TaskId::kNumberLine;
  bool cot = true;
  std::string prompt;
  std::string response;
  std::vector<int> response_tokens;  // ends with the end marker
  std::vector<double> features;
  ActionLabel action{"x"};
};

/// Rolls the task oracle from resets seeded mix_seed(seed, e) and records one
/// example per visited state until `n` examples exist. Deals without a
/// solution (EZPoints, Points24) are skipped.
std::vector<SftExample> generate_dataset(TaskId task, const EnvOptions& options, int n, bool cot,
                                         std::uint64_t seed, const Vocabulary& vocab);

/// JSON-lines with fields task, cot, prompt, response, action, features.
void write_dataset(std::ostream& out, std::span<const SftExample> examples);
void write_dataset(const std::filesystem::path& path, std::span<const SftExample> examples);
std::vector<SftExample> read_dataset(const std::filesystem::path& path, const Vocabulary& vocab);

/// Last 2% by index (at least one example when there are two or more).
std::size_t holdout_begin(std::size_t n);

struct SftOptions {
  int epochs = 1;
  double lr = 1e-3;
  int minibatch = 32;
  double max_grad_norm = 1.0;
};

struct SftReport {
  std::vector<double> losses;  // mean per-token NLL of each minibatch, before its step
  long tokens = 0;
};

/// Teacher-forced cross-entropy on the response tokens, Adam over shuffled
/// minibatches. Throws NonFiniteLoss (parameters restored) on NaN/inf.
SftReport train_sft(PolicyParams& params, std::span<const SftExample> dataset, const SftOptions& options, Rng& rng,
                    const std::function<void(long step, double loss)>& on_step = {});

/// Mean per-token NLL of the dataset under `params`.
double sft_loss(const PolicyParams& params, std::span<const SftExample> dataset);

/// Fraction of examples whose greedy utterance names the labelled action
/// without needing the parser fallback.
double action_accuracy(const PolicyParams& params, const Vocabulary& vocab, std::span<const SftExample> examples,
                       int max_tokens = 128);

struct PolicySetup {
  PolicyParams params;
  std::vector<double> sft_losses;
  std::optional<double> holdout_accuracy;
  std::size_t sft_examples = 0;
};

/// Starting point of an RL run: config.init_checkpoint when set, otherwise a
/// seeded random init followed by SFT on config.sft_examples oracle examples
/// (skipped when sft_examples or sft_epochs is 0). The last 2% of the data is
/// held out and scored with action_accuracy.
PolicySetup prepare_policy(const TrainConfig& config, const Vocabulary& vocab);

/// Bigram grammar of oracle responses for constrained decoding.
TokenMask response_grammar(TaskId task, const Vocabulary& vocab, const EnvOptions& options, bool cot);

}  // namespace cotrl
