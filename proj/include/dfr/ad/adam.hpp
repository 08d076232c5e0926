#pragma once

#include <vector>

#include "dfr/ad/tensor.hpp"

namespace dfr::ad {

struct AdamConfig {
  Real lr = 5e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

struct AdamState {
  ArrX m, v;
  long t = 0;
};

// One Adam update with bias correction:
//   m_hat = m / (1 - beta1^t),  v_hat = v / (1 - beta2^t)
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
// t is incremented before the correction. Refuses non-finite gradients.
void adam_step(ArrX& params, const ArrX& grads, AdamState& state, const AdamConfig& cfg);

// Convenience wrapper over a fixed set of parameter tensors. step() reads
// each tensor's grad buffer (missing/empty grad counts as zero).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void add_param(Tensor& t, Real lr_override = -1);
  void step();
  void zero_grad();
  long steps_taken() const { return t_; }

 private:
  struct Slot {
    Tensor* p;
    AdamState state;
    AdamConfig cfg;
  };
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  long t_ = 0;
};

}  // namespace dfr::ad
