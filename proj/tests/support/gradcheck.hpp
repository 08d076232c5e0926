#pragma once

#include <functional>
#include <span>

#include "dfr/ad/tensor.hpp"
#include "dfr/core/rng.hpp"

namespace dfr::test {

// Central finite-difference gradient check. `forward` must be a pure
// function of the params' current data; `backward` must zero grads and
// fill each param's grad analytically. Checks `coords` randomly chosen
// coordinates per parameter (all coordinates if coords <= 0) and returns
// the maximum relative error, with denominator max(|a|, |fd|, 1e-6).
double max_rel_err_fd(std::span<ad::Tensor* const> params,
                      const std::function<Real()>& forward,
                      const std::function<void()>& backward, Rng& rng, int coords = 5,
                      Real h = 1e-5);

}  // namespace dfr::test
