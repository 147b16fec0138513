#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cotrl/prompting.hpp"
#include "cotrl/rng.hpp"
#include "cotrl/vocab.hpp"

namespace cotrl {

struct PolicyDims {
  int vocab = 0;          // V
  int embed = 64;         // d, also the recurrent width
  int features = 0;       // k
  int value_hidden = 64;  // h
  friend bool operator==(const PolicyDims&, const PolicyDims&) = default;
};

/// Location of one tensor inside the flat parameter vector.
struct TensorSlot {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// All trainable tensors of the token generator and its value head, stored
/// contiguously. Layout (row-major):
///   embed  E  [V x d]   token embeddings, input of the next step
///   feat   U  [k x d]   observation projection (column j of the math is row j)
///   bias   b  [1 x d]
///   rec    W  [d x d]   h_t = tanh(E[prev] + U'f + b + W h_{t-1})
///   out    O  [V x d]   logits = O h_t + ob
///   outb   ob [1 x V]
///   v1     [k x h], v1b [1 x h], v2 [h x h], v2b [1 x h], v3 [1 x h], v3b [1 x 1]
///   value = v3 . tanh(v2 tanh(v1'f + v1b) + v2b) + v3b
class PolicyParams {
 public:
  PolicyParams() = default;
  /// Zero-initialized.
  explicit PolicyParams(PolicyDims dims);
  /// Uniform in [-scale, scale], seeded.
  static PolicyParams init(PolicyDims dims, std::uint64_t seed, double scale = 0.08);

  const PolicyDims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  const TensorSlot& slot(std::string_view name) const;

  bool all_finite() const;

  // Offsets of each tensor, cached for the hot loops.
  std::size_t E = 0, U = 0, b = 0, W = 0, O = 0, ob = 0;
  std::size_t v1 = 0, v1b = 0, v2 = 0, v2b = 0, v3 = 0, v3b = 0;

 private:
  PolicyDims dims_;
  std::vector<double> data_;
  std::vector<TensorSlot> slots_;
};

/// Bigram grammar over the response corpus: which token may follow which.
class TokenMask {
 public:
  TokenMask() = default;
  TokenMask(int vocab_size, const std::vector<std::vector<int>>& sequences);
  bool allowed(int prev, int next) const;
  bool empty() const { return allowed_.empty(); }

 private:
  int vocab_ = 0;
  std::vector<char> allowed_;
};

struct SampleOptions {
  double temperature = 1.0;
  int max_tokens = 128;
  bool greedy = false;
  /// Restrict support to the grammar; off by default so the parser fallback
  /// path is exercised.
  const TokenMask* mask = nullptr;
};

/// Autoregressive generation. Recorded log-probs are at temperature 1 and
/// unmasked so they match score_utterance.
Utterance sample_utterance(const PolicyParams& params, const Vocabulary& vocab, std::span<const double> feats,
                           Rng& rng, const SampleOptions& options = {});

/// Teacher-forced per-token log P(tokens[i] | feats, tokens[:i]).
std::vector<double> score_utterance(const PolicyParams& params, std::span<const double> feats,
                                    std::span<const int> tokens);

/// Next-token log-probabilities after a prefix (the begin marker is implicit).
std::vector<double> next_token_logprobs(const PolicyParams& params, std::span<const double> feats,
                                        std::span<const int> prefix);

/// lambda * logp_tht + logp_act.
double scaled_action_logprob(double logp_tht, double logp_act, double lambda);

double value(const PolicyParams& params, std::span<const double> feats);

/// Coefficients of the objective whose gradient `backward` accumulates:
///   policy * (lambda * logp_tht + logp_act)
///   - value_weight * (V - target_value)^2
///   + entropy * mean_t H(p_t)
struct BackwardTerms {
  double policy = 0.0;
  double lambda = 1.0;
  double value_weight = 0.0;
  double target_value = 0.0;
  double entropy = 0.0;
  /// Weight every token's log-prob equally regardless of segmentation (SFT).
  bool all_tokens = false;
  /// When set, replaces `policy` with a value computed from the forward
  /// pass (logp_tht, logp_act); PPO uses it to apply the clipped ratio.
  std::function<double(double, double)> policy_weight;
};

struct BackwardStats {
  double logp_tht = 0.0;
  double logp_act = 0.0;
  double logp_all = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean over positions
};

/// Adds the gradient of the objective (ascent direction) into `grad`, which
/// must have params.size() entries.
BackwardStats backward(const PolicyParams& params, std::span<const double> feats, std::span<const int> tokens,
                       const Segmentation& seg, const BackwardTerms& terms, std::span<double> grad);

/// Convenience form with a freshly allocated gradient.
std::vector<double> backward(const PolicyParams& params, std::span<const double> feats, std::span<const int> tokens,
                             const Segmentation& seg, double weight_policy, double lambda, double target_value,
                             double weight_value);

}  // namespace cotrl
