#include "dfr/ad/adam.hpp"

#include <cmath>

#include "dfr/core/error.hpp"

namespace dfr::ad {

void adam_step(ArrX& params, const ArrX& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw DataError("adam: grad/param size mismatch");
  if (!grads.allFinite()) throw NumericError("adam: non-finite gradient, step refused");
  if (state.m.size() != params.size()) {
    state.m = ArrX::Zero(params.size());
    state.v = ArrX::Zero(params.size());
  }
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1 - cfg.beta2) * grads * grads;
  const Real c1 = 1 - std::pow(cfg.beta1, Real(state.t));
  const Real c2 = 1 - std::pow(cfg.beta2, Real(state.t));
  params -= cfg.lr * (state.m / c1) / ((state.v / c2).sqrt() + cfg.eps);
}

void AdamOptimizer::add_param(Tensor& t, Real lr_override) {
  Slot s;
  s.p = &t;
  s.cfg = cfg_;
  if (lr_override > 0) s.cfg.lr = lr_override;
  slots_.push_back(std::move(s));
}

void AdamOptimizer::step() {
  // Validate all grads before mutating anything, so a refused step leaves
  // every parameter untouched.
  for (Slot& s : slots_) {
    if (s.p->grad.size() && !s.p->grad.allFinite())
      throw NumericError("adam: non-finite gradient, step refused");
  }
  ++t_;
  for (Slot& s : slots_) {
    s.p->ensure_grad();
    adam_step(s.p->data, s.p->grad, s.state, s.cfg);
  }
}

void AdamOptimizer::zero_grad() {
  for (Slot& s : slots_) s.p->zero_grad();
}

}  // namespace dfr::ad
