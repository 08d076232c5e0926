#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dfr/ad/graph.hpp"
#include "dfr/core/rng.hpp"
#include "dfr/fields/encoding.hpp"

namespace dfr::fields {

struct FieldConfig {
  int hidden_layers = 4;
  int width = 128;
  int color_hidden = 64;
  PosEncConfig enc_x{10, true};
  PosEncConfig enc_d{4, true};
};

struct FieldOutput {
  Vec3 rgb;    // componentwise in [0,1]
  Real sigma;  // >= 0, per unit length
};

// Coordinate MLP mapping (x, d) -> (rgb, sigma). The density head hangs
// off the trunk before the view direction is injected, so sigma is
// view-independent by construction.
struct FieldParams {
  FieldConfig cfg;
  std::vector<ad::Tensor> w, b;        // trunk
  ad::Tensor sigma_w, sigma_b;         // [width,1], [1]
  ad::Tensor color_w0, color_b0;       // [width + enc_d, color_hidden]
  ad::Tensor color_w1, color_b1;       // [color_hidden, 3]

  static FieldParams init(const FieldConfig& cfg, Rng& rng);

  std::vector<std::pair<std::string, ad::Tensor*>> named(const std::string& prefix);
  std::vector<std::pair<std::string, const ad::Tensor*>> named(const std::string& prefix) const;
  // Replaces parameters from a checkpoint map; throws on missing or
  // shape-mismatched entries.
  void load(const std::map<std::string, ad::Tensor>& ckpt, const std::string& prefix);
};

// Pure batched evaluation (no graph). X rows are points, D rows unit
// view directions (re-normalized if within 1e-3 of unit, else error).
void eval_field_batch(const FieldParams& p, const Points& x, const Points& d, ArrX& sigma,
                      Points& rgb);
void eval_field_density(const FieldParams& p, const Points& x, ArrX& sigma);
FieldOutput eval_field(const FieldParams& p, const Vec3& x, const Vec3& d);

// In-graph evaluation from already-encoded inputs.
struct FieldVals {
  ad::Val sigma;  // [S]
  ad::Val rgb;    // [S,3]
};
FieldVals emit_field(ad::Graph& g, FieldParams& p, ad::Val enc_x, ad::Val enc_d);
ad::Val emit_field_density(ad::Graph& g, FieldParams& p, ad::Val enc_x);

}  // namespace dfr::fields
