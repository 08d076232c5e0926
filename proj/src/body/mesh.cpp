#include "dfr/body/mesh.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "dfr/core/error.hpp"

namespace dfr::body {

bool Aabb::ray_range(const Vec3& o, const Vec3& d, Real& t0, Real& t1) const {
  t0 = 0;
  t1 = std::numeric_limits<Real>::max();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < Real(1e-300)) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    Real ta = (lo[a] - o[a]) / d[a];
    Real tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

void SkinnedMesh::validate() const {
  if (verts.rows() == 0 || faces.rows() == 0) throw DataError("mesh: empty");
  if (long(weights.size()) != verts.rows()) throw DataError("mesh: weights per vertex required");
  for (long f = 0; f < faces.rows(); ++f)
    for (int k = 0; k < 3; ++k)
      if (faces(f, k) < 0 || faces(f, k) >= verts.rows())
        throw DataError("mesh: face index out of range at face " + std::to_string(f));
  for (size_t v = 0; v < weights.size(); ++v) {
    Real s = 0;
    for (int k = 0; k < weights[v].count; ++k) {
      if (weights[v].w[k] < 0) throw DataError("mesh: negative skin weight at vertex " + std::to_string(v));
      s += weights[v].w[k];
    }
    if (std::abs(s - 1) > Real(1e-9))
      throw DataError("mesh: skin weights of vertex " + std::to_string(v) + " sum to " +
                      std::to_string(s));
  }
}

void SkinnedMesh::check_watertight() const {
  // Each undirected edge must be used exactly twice, once per direction.
  std::map<std::pair<int, int>, int> dir;
  for (long f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = faces(f, k), b = faces(f, (k + 1) % 3);
      if (a == b) throw DataError("mesh: degenerate edge in face " + std::to_string(f));
      dir[{a, b}] += 1;
    }
  }
  for (const auto& [e, n] : dir) {
    auto rev = dir.find({e.second, e.first});
    if (n != 1 || rev == dir.end() || rev->second != 1)
      throw DataError("mesh: not watertight at edge (" + std::to_string(e.first) + "," +
                      std::to_string(e.second) + ")");
  }
}

Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                            Vec3& bary) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const Real d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) {
    bary = {1, 0, 0};
    return a;
  }
  const Vec3 bp = p - b;
  const Real d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) {
    bary = {0, 1, 0};
    return b;
  }
  const Real vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    Real v = d1 / (d1 - d3);
    bary = {1 - v, v, 0};
    return a + v * ab;
  }
  const Vec3 cp = p - c;
  const Real d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) {
    bary = {0, 0, 1};
    return c;
  }
  const Real vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    Real w = d2 / (d2 - d6);
    bary = {1 - w, 0, w};
    return a + w * ac;
  }
  const Real va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    Real w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary = {0, 1 - w, w};
    return b + w * (c - b);
  }
  const Real denom = 1 / (va + vb + vc);
  const Real v = vb * denom, w = vc * denom;
  bary = {1 - v - w, v, w};
  return a + ab * v + ac * w;
}

MeshTree::MeshTree(const Points& verts, const Triangles& faces)
    : verts_(verts), faces_(faces) {
  order_.resize(faces.rows());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = int(i);
  if (!order_.empty()) build(0, int(order_.size()));
}

int MeshTree::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (int i = begin; i < end; ++i)
    for (int k = 0; k < 3; ++k) node.box.expand(verts_.row(faces_(order_[i], k)).transpose());
  const int id = int(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 8) return id;

  Vec3 ext = node.box.diag();
  int axis = 0;
  ext.maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int ta, int tb) {
                     Real ca = verts_(faces_(ta, 0), axis) + verts_(faces_(ta, 1), axis) +
                               verts_(faces_(ta, 2), axis);
                     Real cb = verts_(faces_(tb, 0), axis) + verts_(faces_(tb, 1), axis) +
                               verts_(faces_(tb, 2), axis);
                     return ca < cb || (ca == cb && ta < tb);
                   });
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void MeshTree::closest_rec(int ni, const Vec3& p, ClosestHit& best) const {
  const Node& n = nodes_[ni];
  if (n.box.dist2(p) > best.dist2) return;
  if (n.leaf()) {
    for (int i = n.begin; i < n.end; ++i) {
      const int t = order_[i];
      Vec3 bary;
      Vec3 q = closest_point_triangle(p, verts_.row(faces_(t, 0)).transpose(),
                                      verts_.row(faces_(t, 1)).transpose(),
                                      verts_.row(faces_(t, 2)).transpose(), bary);
      const Real d2 = (q - p).squaredNorm();
      if (d2 < best.dist2 || (d2 == best.dist2 && t < best.tri)) {
        best = {d2, t, q, bary};
      }
    }
    return;
  }
  const Real dl = nodes_[n.left].box.dist2(p), dr = nodes_[n.right].box.dist2(p);
  if (dl <= dr) {
    closest_rec(n.left, p, best);
    closest_rec(n.right, p, best);
  } else {
    closest_rec(n.right, p, best);
    closest_rec(n.left, p, best);
  }
}

ClosestHit MeshTree::closest(const Vec3& p) const {
  ClosestHit best;
  if (!nodes_.empty()) closest_rec(0, p, best);
  return best;
}

namespace {
// Fixed probe directions; later entries are fallbacks when a crossing is
// too close to an edge or vertex to be trusted.
const Vec3 kProbeDirs[4] = {
    Vec3(0.57735026918962576, 0.28497106939341590, 0.76512394672329389).normalized(),
    Vec3(-0.33721054453459414, 0.87290613666843887, 0.35244700766194649).normalized(),
    Vec3(0.12906381261911925, -0.51237112932883050, 0.84902344519329364).normalized(),
    Vec3(-0.77215539215623114, -0.21212324460548548, 0.59891358397241667).normalized(),
};
}  // namespace

int MeshTree::count_crossings(int ni, const Vec3& o, const Vec3& d) const {
  const Node& n = nodes_[ni];
  Real t0, t1;
  if (!n.box.ray_range(o, d, t0, t1)) return 0;
  if (!n.leaf()) {
    int a = count_crossings(n.left, o, d);
    if (a < 0) return -1;
    int b = count_crossings(n.right, o, d);
    if (b < 0) return -1;
    return a + b;
  }
  int crossings = 0;
  for (int i = n.begin; i < n.end; ++i) {
    const int t = order_[i];
    const Vec3 a = verts_.row(faces_(t, 0)).transpose();
    const Vec3 e1 = Vec3(verts_.row(faces_(t, 1)).transpose()) - a;
    const Vec3 e2 = Vec3(verts_.row(faces_(t, 2)).transpose()) - a;
    const Vec3 pv = d.cross(e2);
    const Real det = e1.dot(pv);
    const Real area2 = e1.cross(e2).norm();
    if (std::abs(det) < Real(1e-14) * std::max(area2, Real(1e-30))) {
      // ray nearly parallel to the triangle plane; only a problem if it
      // could actually graze this triangle
      continue;
    }
    const Real inv = 1 / det;
    const Vec3 tv = o - a;
    const Real u = tv.dot(pv) * inv;
    const Vec3 qv = tv.cross(e1);
    const Real v = d.dot(qv) * inv;
    const Real tt = e2.dot(qv) * inv;
    const Real eps = Real(1e-12);
    if (u < -eps || v < -eps || u + v > 1 + eps || tt <= eps) {
      if (tt > eps && u > -1e-9 && v > -1e-9 && u + v < 1 + 1e-9) return -1;  // grazing
      continue;
    }
    if (u < eps || v < eps || u + v > 1 - eps) return -1;  // edge/vertex hit
    ++crossings;
  }
  return crossings;
}

bool MeshTree::inside(const Vec3& p) const {
  if (nodes_.empty()) return false;
  if (!nodes_[0].box.padded(1e-9).contains(p)) return false;
  if (closest(p).dist2 <= Real(1e-24)) return true;  // surface counts as inside
  for (const Vec3& dir : kProbeDirs) {
    int c = count_crossings(0, p, dir);
    if (c >= 0) return (c % 2) == 1;
  }
  throw NumericError("inside test: all probe directions degenerate");
}

}  // namespace dfr::body
