#pragma once

#include <string>
#include <vector>

#include "dfr/core/types.hpp"

namespace dfr::body {

struct Joint {
  std::string name;
  int parent = -1;  // root has parent -1
  Vec3 offset = Vec3::Zero();  // rest-pose offset from parent joint
};

struct Skeleton {
  std::vector<Joint> joints;
  int size() const { return int(joints.size()); }
  void validate() const;  // tree order, single root, finite offsets
};

// Per-frame body parameters: axis-angle per joint plus a root translation
// and a global scale shared across frames.
struct PoseParams {
  MatX axis_angles;  // J x 3
  Vec3 translation = Vec3::Zero();
  Real scale = 1;

  static PoseParams rest(int num_joints) {
    PoseParams p;
    p.axis_angles = MatX::Zero(num_joints, 3);
    return p;
  }
  void validate(int num_joints) const;
};

// Rodrigues rotation and its directional derivatives.
Mat3 rodrigues(const Vec3& aa);
// dL/d(aa) given dL/dR; exact for all angles with a series fallback near 0.
Vec3 rodrigues_vjp(const Vec3& aa, const Mat3& dR);

// Local joint transform: translate by rest offset, then rotate.
Aff3 joint_local(const Joint& j, const Vec3& aa);

// World transform per joint (chain products, root first).
std::vector<Aff3> joint_world_transforms(const Skeleton& skel, const MatX& axis_angles);

// Reverse pass through the chain: given dL/dW_j for every joint, produce
// dL/d(axis_angles). Consumes the cotangents in place.
MatX joint_chain_vjp(const Skeleton& skel, const MatX& axis_angles,
                     const std::vector<Aff3>& world, std::vector<Mat3>& dW_lin,
                     std::vector<Vec3>& dW_trans);

}  // namespace dfr::body
