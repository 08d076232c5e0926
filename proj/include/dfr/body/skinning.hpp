#pragma once

#include "dfr/body/asset.hpp"

namespace dfr::body {

using Mat34 = Eigen::Matrix<Real, 3, 4>;

// Body posed by theta. vert_tf holds the per-vertex blended canonical->
// observation transforms M_v (before the global scale/translation, which
// are shared and applied outside).
struct PosedBody {
  const BodyModel* body = nullptr;
  PoseParams pose;
  std::vector<Aff3> joint_world;
  std::vector<Mat34> vert_tf;  // M_v
  Points verts;                // observation-space vertices
  Aabb box;
  MeshTree tree;  // over posed vertices (nearest-point queries)
};

// Linear blend skinning. Posed vertex = scale * (M_v * v_canonical) +
// translation, with M_v = sum_j w_vj W_j(theta) W_j(canonical)^-1.
// Throws when a blended transform degenerates (non-invertible).
PosedBody skin_mesh(const BodyModel& body, const PoseParams& pose);

enum class WarpMode { kNearestSurface, kNearestVertex };

struct WarpResult {
  Vec3 canonical = Vec3::Zero();
  bool supported = false;  // within the distance cutoff of the mesh
  int tri = -1;            // assignment (fixed per evaluation)
  Vec3 bary = Vec3::Zero();
};

// Observation -> canonical warp: rigid transform of the closest surface
// point (corner transforms blended barycentrically, rotation block
// re-orthonormalized). Points farther than `cutoff` (canonical units)
// from the mesh are flagged unsupported.
WarpResult warp_to_canonical(const PosedBody& posed, const Vec3& x, Real cutoff = 0.5,
                             WarpMode mode = WarpMode::kNearestSurface);

// Warp with a frozen (triangle, barycentric) assignment. The warp's
// derivative convention holds the assignment constant, so
// finite-difference checks of pose gradients must go through this form.
Vec3 warp_with_assignment(const BodyModel& body, const PoseParams& pose, int tri,
                          const Vec3& bary, const Vec3& x);

// Curved-ray view directions: d'_i = normalize(x_i - x_{i-1}); the first
// sample copies the second; coincident samples reuse the previous
// direction. Returns the source index used per sample (for the in-graph
// variant, which must apply the same selection).
std::vector<int> view_dir_sources(const Points& warped, Real tiny = 1e-12);
Points recompute_view_dirs(const Points& warped);

// Re-orthonormalization of a blended rotation block (Gram-Schmidt on
// columns), plus its vector-Jacobian product.
Mat3 gram_schmidt(const Mat3& b);
Mat3 gram_schmidt_vjp(const Mat3& b, const Mat3& dR);

// Accumulates cotangents w.r.t. pose parameters through the skinning
// chain. Register per-vertex contributions, then call finish().
class LbsBackward {
 public:
  LbsBackward(const BodyModel& body, const PosedBody& posed);

  // dL/dM_v (blended transform of vertex v, pre scale/translation)
  void add_vertex_transform_grad(int v, const Mat3& dlin, const Vec3& dtrans);
  // dL/d(posed vertex position)
  void add_vertex_position_grad(int v, const Vec3& dpos);
  void add_translation_grad(const Vec3& g) { d_trans_ += g; }
  void add_scale_grad(Real g) { d_scale_ += g; }

  struct PoseGrad {
    MatX axis_angles;  // J x 3
    Vec3 translation;
    Real scale;
  };
  PoseGrad finish();

 private:
  const BodyModel& body_;
  const PosedBody& posed_;
  std::vector<Mat3> dM_lin_;
  std::vector<Vec3> dM_trans_;
  Vec3 d_trans_ = Vec3::Zero();
  Real d_scale_ = 0;
};

}  // namespace dfr::body
