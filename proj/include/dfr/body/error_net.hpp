#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dfr/ad/graph.hpp"
#include "dfr/core/rng.hpp"
#include "dfr/fields/encoding.hpp"

namespace dfr::body {

// Per-frame warp error correction: MLP(posenc(x) ++ latent_f) -> 3-vector
// offset. The final layer is zero-initialized so corrections start at
// zero; the net is used during training only and bypassed for rendering.
struct ErrorNet {
  fields::PosEncConfig enc{6, true};
  int hidden = 64;
  int latent_dim = 8;
  int num_frames = 0;
  ad::Tensor w0, b0, w1, b1, w2, b2;
  ad::Tensor latents;  // [num_frames, latent_dim], zero-initialized

  static ErrorNet init(int num_frames, Rng& rng);

  // Offsets [S,3] for training frame `frame` at observation positions x.
  ad::Val emit(ad::Graph& g, const Points& x, int frame);

  std::vector<std::pair<std::string, ad::Tensor*>> named();
  std::vector<std::pair<std::string, const ad::Tensor*>> named() const;
  void load(const std::map<std::string, ad::Tensor>& ckpt);
};

}  // namespace dfr::body
