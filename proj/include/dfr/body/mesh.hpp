#pragma once

#include <vector>

#include "dfr/core/types.hpp"

namespace dfr::body {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<Real>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<Real>::lowest());
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 diag() const { return hi - lo; }
  Aabb padded(Real pad) const { return {lo.array() - pad, hi.array() + pad}; }
  Real dist2(const Vec3& p) const {
    Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  // slab intersection with the ray o + t*d over t in [0, inf); returns
  // entry/exit or false
  bool ray_range(const Vec3& o, const Vec3& d, Real& t0, Real& t1) const;
};

// Skin weights: up to 4 (joint, weight) pairs per vertex, weights >= 0
// summing to 1.
struct VertexWeights {
  int joint[4] = {-1, -1, -1, -1};
  Real w[4] = {0, 0, 0, 0};
  int count = 0;
};

struct SkinnedMesh {
  Points verts;  // canonical positions
  Triangles faces;
  std::vector<VertexWeights> weights;
  std::vector<int> feet;  // vertex indices used for ground contact

  void validate() const;        // shapes, weight rows sum to 1
  void check_watertight() const;  // every edge shared by exactly two faces
};

struct ClosestHit {
  Real dist2 = std::numeric_limits<Real>::max();
  int tri = -1;
  Vec3 point = Vec3::Zero();
  Vec3 bary = Vec3::Zero();
};

// Exact closest point on a triangle (Ericson), with barycentrics.
Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                            Vec3& bary);

// Median-split AABB tree. Queries return exactly the brute-force result
// (minimum distance, ties broken by lowest triangle index).
class MeshTree {
 public:
  MeshTree() = default;
  MeshTree(const Points& verts, const Triangles& faces);

  ClosestHit closest(const Vec3& p) const;
  // Parity ray-crossing test; surface points count as inside. Requires a
  // watertight mesh (possibly several disjoint closed components).
  bool inside(const Vec3& p) const;
  const Aabb& bounds() const { return nodes_.empty() ? empty_box_ : nodes_[0].box; }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // children, or
    int begin = 0, end = 0;     // triangle range for leaves
    bool leaf() const { return left < 0; }
  };
  int build(int begin, int end);
  void closest_rec(int ni, const Vec3& p, ClosestHit& best) const;
  // 0/1 crossings added, or -1 when a degenerate hit was seen
  int count_crossings(int ni, const Vec3& o, const Vec3& d) const;

  Points verts_;
  Triangles faces_;
  std::vector<int> order_;  // triangle indices, contiguous per leaf
  std::vector<Node> nodes_;
  Aabb empty_box_;
};

}  // namespace dfr::body
