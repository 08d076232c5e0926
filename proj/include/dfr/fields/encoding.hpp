#pragma once

#include "dfr/ad/graph.hpp"
#include "dfr/core/types.hpp"

namespace dfr::fields {

struct PosEncConfig {
  int num_freq = 10;  // L
  bool include_input = true;

  int output_dim(int input_dim) const {
    return input_dim * (2 * num_freq + (include_input ? 1 : 0));
  }
};

// Frequency encoding: [x?, sin(2^k pi x) for k=0..L-1, cos(2^k pi x) for
// k=0..L-1], each block component-wise. Input rows are points.
MatX positional_encode(const Eigen::Ref<const MatX>& x, const PosEncConfig& cfg);

VecX positional_encode_vec(const VecX& x, const PosEncConfig& cfg);

// Same layout built in-graph (differentiable w.r.t. x).
ad::Val emit_positional_encode(ad::Val x, const PosEncConfig& cfg);

}  // namespace dfr::fields
