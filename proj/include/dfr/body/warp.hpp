#pragma once

#include <memory>

#include "dfr/ad/graph.hpp"
#include "dfr/body/skinning.hpp"

namespace dfr::body {

// In-graph batched warp. The pose tensors must hold the same values the
// posed body was skinned from; gradients flow into them through the
// blended transforms (the nearest-triangle assignment and barycentric
// weights are constants of the evaluation).
struct WarpBatch {
  ad::Val warped;                  // [S,3]
  std::vector<uint8_t> supported;  // per sample
};

WarpBatch emit_warp(ad::Graph& g, std::shared_ptr<const PosedBody> posed, const Points& x,
                    ad::Tensor& axis_angles, ad::Tensor& translation, ad::Tensor& scale,
                    Real cutoff = 0.5, WarpMode mode = WarpMode::kNearestSurface);

// In-graph curved-ray view directions for one ray's warped samples
// ([N,3]); applies the same source-index selection as the pure variant.
ad::Val emit_view_dirs(ad::Val warped_ray, const std::vector<int>& sources);

// Batched variant over ray-major samples [R*N,3]; sources are per-sample
// local indices from view_dir_sources applied per ray.
ad::Val emit_view_dirs_batch(ad::Val warped, int rays, int samples,
                             const std::vector<int>& sources);

}  // namespace dfr::body
