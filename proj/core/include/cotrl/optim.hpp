#pragma once

#include <span>
#include <vector>

namespace cotrl {

/// Adam on a flat parameter vector, minimizing.
class Adam {
 public:
  explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// params -= lr * m_hat / (sqrt(v_hat) + eps), with `grad` the loss gradient.
  void step(std::span<double> params, std::span<const double> grad, double lr);

  long steps() const { return t_; }
  void reset();

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

double l2_norm(std::span<const double> v);

/// Rescales `grad` so its L2 norm is at most max_norm; returns the norm before
/// clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace cotrl
