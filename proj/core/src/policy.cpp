#include "cotrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cotrl {

namespace {

inline double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// In-place log-softmax; returns nothing, leaves log-probs in `z`.
void log_softmax(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : z) v -= lse;
}

/// Shared recurrent step state.
struct Cell {
  const PolicyParams& p;
  int d;
  int V;
  std::vector<double> c;  // U'f + b, constant over the sequence

  Cell(const PolicyParams& params, std::span<const double> feats) : p(params), d(params.dims().embed), V(params.dims().vocab) {
    if (static_cast<int>(feats.size()) != params.dims().features) {
      throw UsageError("feature vector has " + std::to_string(feats.size()) + " entries, policy expects " +
                       std::to_string(params.dims().features));
    }
    const double* w = params.data().data();
    c.assign(w + p.b, w + p.b + d);
    for (std::size_t j = 0; j < feats.size(); ++j) {
      if (feats[j] != 0.0) axpy(feats[j], w + p.U + j * d, c.data(), d);
    }
  }

  /// h_out = tanh(c + E[prev] + W h_prev)
  void step(int prev, const double* h_prev, double* h_out) const {
    const double* w = p.data().data();
    const double* e = w + p.E + static_cast<std::size_t>(prev) * d;
    for (int i = 0; i < d; ++i) {
      const double rec = h_prev ? dot(w + p.W + static_cast<std::size_t>(i) * d, h_prev, d) : 0.0;
      h_out[i] = std::tanh(c[i] + e[i] + rec);
    }
  }

  /// z = O h + ob
  void logits(const double* h, double* z) const {
    const double* w = p.data().data();
    for (int v = 0; v < V; ++v) z[v] = dot(w + p.O + static_cast<std::size_t>(v) * d, h, d) + w[p.ob + v];
  }
};

void check_tokens(std::span<const int> tokens, int V) {
  for (int t : tokens) {
    if (t < 0 || t >= V) throw UsageError("token id " + std::to_string(t) + " outside the vocabulary");
  }
}

struct ForwardTrace {
  int n = 0;
  std::vector<double> h;     // (n + 1) x d, row 0 is the zero initial state
  std::vector<double> logp;  // n x V log-softmax rows
};

ForwardTrace forward(const Cell& cell, std::span<const int> tokens) {
  const int d = cell.d;
  const int V = cell.V;
  ForwardTrace tr;
  tr.n = static_cast<int>(tokens.size());
  tr.h.assign(static_cast<std::size_t>(tr.n + 1) * d, 0.0);
  tr.logp.assign(static_cast<std::size_t>(tr.n) * V, 0.0);
  for (int t = 0; t < tr.n; ++t) {
    const int prev = t == 0 ? Vocabulary::kBos : tokens[t - 1];
    const double* h_prev = t == 0 ? nullptr : tr.h.data() + static_cast<std::size_t>(t) * d;
    double* h = tr.h.data() + static_cast<std::size_t>(t + 1) * d;
    cell.step(prev, h_prev, h);
    double* z = tr.logp.data() + static_cast<std::size_t>(t) * V;
    cell.logits(h, z);
    log_softmax(std::span<double>(z, V));
  }
  return tr;
}

int argmax_masked(std::span<const double> z, const TokenMask* mask, int prev) {
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < static_cast<int>(z.size()); ++v) {
    if (mask && !mask->allowed(prev, v)) continue;
    if (best < 0 || z[v] > best_v) {
      best = v;
      best_v = z[v];
    }
  }
  return best;
}

}  // namespace

PolicyParams::PolicyParams(PolicyDims dims) : dims_(dims) {
  if (dims.vocab < 2 || dims.embed < 1 || dims.features < 1 || dims.value_hidden < 1) {
    throw UsageError("policy dimensions must be positive");
  }
  const int V = dims.vocab, d = dims.embed, k = dims.features, h = dims.value_hidden;
  std::size_t offset = 0;
  auto add = [&](const char* name, int rows, int cols) {
    slots_.push_back(TensorSlot{name, offset, rows, cols});
    offset += slots_.back().size();
    return slots_.back().offset;
  };
  E = add("embed", V, d);
  U = add("feat", k, d);
  b = add("bias", 1, d);
  W = add("rec", d, d);
  O = add("out", V, d);
  ob = add("outb", 1, V);
  v1 = add("v1", k, h);
  v1b = add("v1b", 1, h);
  v2 = add("v2", h, h);
  v2b = add("v2b", 1, h);
  v3 = add("v3", 1, h);
  v3b = add("v3b", 1, 1);
  data_.assign(offset, 0.0);
}

PolicyParams PolicyParams::init(PolicyDims dims, std::uint64_t seed, double scale) {
  PolicyParams p(dims);
  Rng rng(seed);
  for (double& w : p.data_) w = (2.0 * rng.uniform() - 1.0) * scale;
  return p;
}

const TensorSlot& PolicyParams::slot(std::string_view name) const {
  for (const auto& s : slots_) {
    if (s.name == name) return s;
  }
  throw UsageError("no tensor named " + std::string(name));
}

bool PolicyParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double w) { return std::isfinite(w); });
}

TokenMask::TokenMask(int vocab_size, const std::vector<std::vector<int>>& sequences)
    : vocab_(vocab_size), allowed_(static_cast<std::size_t>(vocab_size) * vocab_size, 0) {
  for (const auto& seq : sequences) {
    int prev = Vocabulary::kBos;
    for (int t : seq) {
      allowed_[static_cast<std::size_t>(prev) * vocab_ + t] = 1;
      prev = t;
    }
  }
}

bool TokenMask::allowed(int prev, int next) const {
  if (allowed_.empty()) return true;
  return allowed_[static_cast<std::size_t>(prev) * vocab_ + next] != 0;
}

Utterance sample_utterance(const PolicyParams& params, const Vocabulary& vocab, std::span<const double> feats,
                           Rng& rng, const SampleOptions& options) {
  if (!options.greedy && !(options.temperature > 0.0)) throw UsageError("temperature must be positive");
  if (options.max_tokens < 1) throw UsageError("max_tokens must be at least 1");
  if (vocab.size() != params.dims().vocab) throw UsageError("vocabulary does not match the policy");
  const Cell cell(params, feats);
  const int d = cell.d;
  const int V = cell.V;
  std::vector<double> h_prev(d, 0.0), h(d), z(V), weights(V);

  Utterance u;
  int prev = Vocabulary::kBos;
  for (int t = 0; t < options.max_tokens; ++t) {
    cell.step(prev, t == 0 ? nullptr : h_prev.data(), h.data());
    cell.logits(h.data(), z.data());
    int next = -1;
    if (options.greedy) {
      next = argmax_masked(z, options.mask, prev);
      if (next < 0) next = argmax_masked(z, nullptr, prev);
    } else {
      const double m = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (int v = 0; v < V; ++v) {
        const bool ok = !options.mask || options.mask->allowed(prev, v);
        weights[v] = ok ? std::exp((z[v] - m) / options.temperature) : 0.0;
        total += weights[v];
      }
      if (total <= 0.0) {
        for (int v = 0; v < V; ++v) weights[v] = std::exp((z[v] - m) / options.temperature);
      }
      next = static_cast<int>(rng.categorical(weights));
    }
    log_softmax(z);
    u.tokens.push_back(next);
    u.token_logps.push_back(z[next]);
    if (next == Vocabulary::kEos) break;
    prev = next;
    std::swap(h_prev, h);
  }
  u.truncated = u.tokens.back() != Vocabulary::kEos;
  u.text = vocab.decode(u.tokens);
  const auto seg = segment_utterance(u.tokens, vocab);
  u.tht_range = seg.tht;
  u.act_range = seg.act;
  return u;
}

std::vector<double> score_utterance(const PolicyParams& params, std::span<const double> feats,
                                    std::span<const int> tokens) {
  check_tokens(tokens, params.dims().vocab);
  const Cell cell(params, feats);
  const auto tr = forward(cell, tokens);
  std::vector<double> out(tokens.size());
  for (int t = 0; t < tr.n; ++t) out[t] = tr.logp[static_cast<std::size_t>(t) * cell.V + tokens[t]];
  return out;
}

std::vector<double> next_token_logprobs(const PolicyParams& params, std::span<const double> feats,
                                        std::span<const int> prefix) {
  check_tokens(prefix, params.dims().vocab);
  const Cell cell(params, feats);
  std::vector<double> h_prev(cell.d, 0.0), h(cell.d), z(cell.V);
  int prev = Vocabulary::kBos;
  for (std::size_t t = 0; t <= prefix.size(); ++t) {
    cell.step(prev, t == 0 ? nullptr : h_prev.data(), h.data());
    if (t == prefix.size()) break;
    prev = prefix[t];
    std::swap(h_prev, h);
  }
  cell.logits(h.data(), z.data());
  log_softmax(z);
  return z;
}

double scaled_action_logprob(double logp_tht, double logp_act, double lambda) {
  return lambda * logp_tht + logp_act;
}

double value(const PolicyParams& params, std::span<const double> feats) {
  const auto& dims = params.dims();
  if (static_cast<int>(feats.size()) != dims.features) throw UsageError("feature dimension mismatch");
  const int hdim = dims.value_hidden;
  const double* w = params.data().data();
  std::vector<double> a1(w + params.v1b, w + params.v1b + hdim);
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (feats[j] != 0.0) axpy(feats[j], w + params.v1 + j * hdim, a1.data(), hdim);
  }
  for (double& x : a1) x = std::tanh(x);
  double out = w[params.v3b];
  for (int i = 0; i < hdim; ++i) {
    const double a2 = std::tanh(w[params.v2b + i] + dot(w + params.v2 + static_cast<std::size_t>(i) * hdim, a1.data(), hdim));
    out += w[params.v3 + i] * a2;
  }
  return out;
}

namespace {

/// Value head forward + backward for d/dV = g; returns V.
double value_backward(const PolicyParams& params, std::span<const double> feats, double target, double weight,
                      std::span<double> grad, bool accumulate) {
  const int hdim = params.dims().value_hidden;
  const double* w = params.data().data();
  std::vector<double> a1(w + params.v1b, w + params.v1b + hdim), a2(hdim);
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (feats[j] != 0.0) axpy(feats[j], w + params.v1 + j * hdim, a1.data(), hdim);
  }
  for (double& x : a1) x = std::tanh(x);
  double v = w[params.v3b];
  for (int i = 0; i < hdim; ++i) {
    a2[i] = std::tanh(w[params.v2b + i] + dot(w + params.v2 + static_cast<std::size_t>(i) * hdim, a1.data(), hdim));
    v += w[params.v3 + i] * a2[i];
  }
  if (!accumulate) return v;

  const double g = -2.0 * weight * (v - target);
  double* gw = grad.data();
  gw[params.v3b] += g;
  std::vector<double> du2(hdim), da1(hdim, 0.0);
  for (int i = 0; i < hdim; ++i) {
    gw[params.v3 + i] += g * a2[i];
    du2[i] = g * w[params.v3 + i] * (1.0 - a2[i] * a2[i]);
  }
  for (int i = 0; i < hdim; ++i) {
    gw[params.v2b + i] += du2[i];
    axpy(du2[i], a1.data(), gw + params.v2 + static_cast<std::size_t>(i) * hdim, hdim);
    axpy(du2[i], w + params.v2 + static_cast<std::size_t>(i) * hdim, da1.data(), hdim);
  }
  for (int i = 0; i < hdim; ++i) da1[i] *= 1.0 - a1[i] * a1[i];
  axpy(1.0, da1.data(), gw + params.v1b, hdim);
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (feats[j] != 0.0) axpy(feats[j], da1.data(), gw + params.v1 + j * hdim, hdim);
  }
  return v;
}

}  // namespace

BackwardStats backward(const PolicyParams& params, std::span<const double> feats, std::span<const int> tokens,
                       const Segmentation& seg, const BackwardTerms& terms, std::span<double> grad) {
  if (grad.size() != params.size()) throw UsageError("gradient buffer size mismatch");
  check_tokens(tokens, params.dims().vocab);
  const Cell cell(params, feats);
  const int d = cell.d;
  const int V = cell.V;
  const auto tr = forward(cell, tokens);
  const int n = tr.n;
  const double* w = params.data().data();
  double* gw = grad.data();

  BackwardStats stats;
  const bool value_term = terms.value_weight != 0.0;
  stats.value = value_backward(params, feats, terms.target_value, terms.value_weight, grad, value_term);

  std::vector<double> entropy(n, 0.0);
  for (int t = 0; t < n; ++t) {
    const double* lp = tr.logp.data() + static_cast<std::size_t>(t) * V;
    double hsum = 0.0;
    for (int v = 0; v < V; ++v) hsum -= std::exp(lp[v]) * lp[v];
    entropy[t] = hsum;
    stats.entropy += hsum;
    const double l = lp[tokens[t]];
    stats.logp_all += l;
    if (seg.tht.contains(t)) stats.logp_tht += l;
    if (seg.act.contains(t)) stats.logp_act += l;
  }
  if (n > 0) stats.entropy /= n;

  const double policy_w = terms.policy_weight ? terms.policy_weight(stats.logp_tht, stats.logp_act) : terms.policy;
  const double ent_w = n > 0 ? terms.entropy / n : 0.0;
  std::vector<double> dz(V), dh(d), carry(d, 0.0), da(d), dc(d, 0.0);
  for (int t = n - 1; t >= 0; --t) {
    double wt = 0.0;
    if (terms.all_tokens) {
      wt = policy_w;
    } else if (seg.tht.contains(t)) {
      wt = policy_w * terms.lambda;
    } else if (seg.act.contains(t)) {
      wt = policy_w;
    }
    const double* h = tr.h.data() + static_cast<std::size_t>(t + 1) * d;
    const double* h_prev = tr.h.data() + static_cast<std::size_t>(t) * d;
    std::copy(carry.begin(), carry.end(), dh.begin());

    if (wt != 0.0 || ent_w != 0.0) {
      const double* lp = tr.logp.data() + static_cast<std::size_t>(t) * V;
      for (int v = 0; v < V; ++v) {
        const double p = std::exp(lp[v]);
        dz[v] = -wt * p - ent_w * p * (lp[v] + entropy[t]);
      }
      dz[tokens[t]] += wt;
      for (int v = 0; v < V; ++v) {
        if (dz[v] == 0.0) continue;
        gw[params.ob + v] += dz[v];
        axpy(dz[v], h, gw + params.O + static_cast<std::size_t>(v) * d, d);
        axpy(dz[v], w + params.O + static_cast<std::size_t>(v) * d, dh.data(), d);
      }
    }

    for (int i = 0; i < d; ++i) da[i] = dh[i] * (1.0 - h[i] * h[i]);
    const int prev = t == 0 ? Vocabulary::kBos : tokens[t - 1];
    axpy(1.0, da.data(), gw + params.E + static_cast<std::size_t>(prev) * d, d);
    axpy(1.0, da.data(), dc.data(), d);
    std::fill(carry.begin(), carry.end(), 0.0);
    if (t > 0) {
      for (int i = 0; i < d; ++i) {
        if (da[i] == 0.0) continue;
        axpy(da[i], h_prev, gw + params.W + static_cast<std::size_t>(i) * d, d);
        axpy(da[i], w + params.W + static_cast<std::size_t>(i) * d, carry.data(), d);
      }
    }
  }
  axpy(1.0, dc.data(), gw + params.b, d);
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (feats[j] != 0.0) axpy(feats[j], dc.data(), gw + params.U + j * d, d);
  }
  return stats;
}

std::vector<double> backward(const PolicyParams& params, std::span<const double> feats, std::span<const int> tokens,
                             const Segmentation& seg, double weight_policy, double lambda, double target_value,
                             double weight_value) {
  std::vector<double> grad(params.size(), 0.0);
  BackwardTerms terms;
  terms.policy = weight_policy;
  terms.lambda = lambda;
  terms.target_value = target_value;
  terms.value_weight = weight_value;
  backward(params, feats, tokens, seg, terms, grad);
  return grad;
}

}  // namespace cotrl
