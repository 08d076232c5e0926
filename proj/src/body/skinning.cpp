#include "dfr/body/skinning.hpp"

#include <cmath>

#include "dfr/core/error.hpp"

namespace dfr::body {

void Skeleton::validate() const {
  if (joints.empty()) throw DataError("skeleton: no joints");
  int roots = 0;
  for (int j = 0; j < size(); ++j) {
    const Joint& jt = joints[j];
    if (jt.parent < 0) {
      ++roots;
      if (j != 0) throw DataError("skeleton: root must be joint 0");
    } else if (jt.parent >= j) {
      throw DataError("skeleton: parent[" + std::to_string(j) + "] must precede the joint");
    }
    if (!jt.offset.allFinite()) throw DataError("skeleton: non-finite offset at " + jt.name);
  }
  if (roots != 1) throw DataError("skeleton: exactly one root required");
}

void PoseParams::validate(int num_joints) const {
  if (axis_angles.rows() != num_joints || axis_angles.cols() != 3)
    throw DataError("pose: axis_angles must be J x 3");
  if (!axis_angles.allFinite() || !translation.allFinite())
    throw DataError("pose: non-finite parameters");
  if (!(scale > 0)) throw DataError("pose: scale must be positive");
}

namespace {
Mat3 cross_mat(const Vec3& a) {
  Mat3 k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return k;
}
}  // namespace

Mat3 rodrigues(const Vec3& aa) {
  const Real t2 = aa.squaredNorm();
  const Real t = std::sqrt(t2);
  Mat3 k = cross_mat(aa);
  Real s, c;  // sin(t)/t and (1-cos(t))/t^2
  if (t < Real(1e-8)) {
    s = 1 - t2 / 6;
    c = Real(0.5) - t2 / 24;
  } else {
    s = std::sin(t) / t;
    c = (1 - std::cos(t)) / t2;
  }
  return Mat3::Identity() + s * k + c * (k * k);
}

Vec3 rodrigues_vjp(const Vec3& aa, const Mat3& dR) {
  const Real t = aa.norm();
  Vec3 g;
  if (t < Real(1e-8)) {
    // R ~ I + [aa]x, so dR/da_i ~ [e_i]x
    for (int i = 0; i < 3; ++i) {
      Mat3 dRi = cross_mat(Vec3::Unit(i));
      g[i] = (dR.array() * dRi.array()).sum();
    }
    return g;
  }
  // Gallego & Yezzi: dR/da_i = (a_i [a]x + [a x (I - R) e_i]x) / t^2 * R
  const Mat3 R = rodrigues(aa);
  const Mat3 K = cross_mat(aa);
  const Mat3 ImR = Mat3::Identity() - R;
  for (int i = 0; i < 3; ++i) {
    Vec3 v = aa.cross(Vec3(ImR.col(i)));
    Mat3 dRi = ((aa[i] * K + cross_mat(v)) / (t * t)) * R;
    g[i] = (dR.array() * dRi.array()).sum();
  }
  return g;
}

Aff3 joint_local(const Joint& j, const Vec3& aa) {
  Aff3 a = Aff3::Identity();
  a.linear() = rodrigues(aa);
  a.translation() = j.offset;
  return a;
}

std::vector<Aff3> joint_world_transforms(const Skeleton& skel, const MatX& axis_angles) {
  std::vector<Aff3> world(skel.size());
  for (int j = 0; j < skel.size(); ++j) {
    Aff3 local = joint_local(skel.joints[j], axis_angles.row(j).transpose());
    world[j] = skel.joints[j].parent < 0 ? local : world[skel.joints[j].parent] * local;
  }
  return world;
}

MatX joint_chain_vjp(const Skeleton& skel, const MatX& axis_angles,
                     const std::vector<Aff3>& world, std::vector<Mat3>& dW_lin,
                     std::vector<Vec3>& dW_trans) {
  const int nj = skel.size();
  MatX daa = MatX::Zero(nj, 3);
  for (int j = nj - 1; j >= 0; --j) {
    const int par = skel.joints[j].parent;
    const Aff3 local = joint_local(skel.joints[j], axis_angles.row(j).transpose());
    const Mat3 par_lin = par < 0 ? Mat3(Mat3::Identity()) : Mat3(world[par].linear());
    // W_j = W_par * L_j
    if (par >= 0) {
      dW_lin[par] += dW_lin[j] * local.linear().transpose() +
                     dW_trans[j] * local.translation().transpose();
      dW_trans[par] += dW_trans[j];
    }
    const Mat3 dL_lin = par_lin.transpose() * dW_lin[j];
    // local translation is the constant rest offset; only rotation varies
    daa.row(j) = rodrigues_vjp(axis_angles.row(j).transpose(), dL_lin).transpose();
  }
  return daa;
}


// --- skinning, warp, view directions ------------------------------------

PosedBody skin_mesh(const BodyModel& body, const PoseParams& pose) {
  pose.validate(body.skel.size());
  PosedBody out;
  out.body = &body;
  out.pose = pose;
  out.joint_world = joint_world_transforms(body.skel, pose.axis_angles);

  const int nj = body.skel.size();
  std::vector<Mat34> joint_tf(nj);  // A_j = W_j(theta) * W_j(canonical)^-1
  for (int j = 0; j < nj; ++j) {
    Aff3 a = out.joint_world[j] * body.canon_world_inv[j];
    joint_tf[j].leftCols<3>() = a.linear();
    joint_tf[j].col(3) = a.translation();
  }

  const long nv = body.mesh.verts.rows();
  out.vert_tf.resize(nv);
  out.verts.resize(nv, 3);
  for (long v = 0; v < nv; ++v) {
    const VertexWeights& w = body.mesh.weights[v];
    Mat34 m = Mat34::Zero();
    for (int k = 0; k < w.count; ++k) m += w.w[k] * joint_tf[w.joint[k]];
    if (std::abs(m.leftCols<3>().determinant()) < Real(1e-8))
      throw NumericError("skin_mesh: singular blended transform at vertex " + std::to_string(v));
    out.vert_tf[v] = m;
    const Vec3 vc = body.mesh.verts.row(v).transpose();
    const Vec3 p = pose.scale * (m.leftCols<3>() * vc + m.col(3)) + pose.translation;
    out.verts.row(v) = p.transpose();
    out.box.expand(p);
  }
  out.tree = MeshTree(out.verts, body.mesh.faces);
  return out;
}

Mat3 gram_schmidt(const Mat3& b) {
  Mat3 r;
  r.col(0) = b.col(0).normalized();
  Vec3 u1 = b.col(1) - r.col(0).dot(b.col(1)) * r.col(0);
  r.col(1) = u1.normalized();
  Vec3 u2 = b.col(2) - r.col(0).dot(b.col(2)) * r.col(0) - r.col(1).dot(b.col(2)) * r.col(1);
  r.col(2) = u2.normalized();
  return r;
}

namespace {
// v = w/|w|: dL/dw = (dL/dv - v (v . dL/dv)) / |w|
Vec3 normalize_vjp(const Vec3& w, const Vec3& v, const Vec3& dv) {
  return (dv - v * v.dot(dv)) / w.norm();
}
}  // namespace

Mat3 gram_schmidt_vjp(const Mat3& b, const Mat3& dR) {
  // recompute forward intermediates
  const Vec3 q0 = b.col(0);
  const Vec3 u0 = q0.normalized();
  const Vec3 q1 = b.col(1) - u0.dot(b.col(1)) * u0;
  const Vec3 u1 = q1.normalized();
  const Vec3 q2 = b.col(2) - u0.dot(b.col(2)) * u0 - u1.dot(b.col(2)) * u1;
  const Vec3 u2 = q2.normalized();

  Mat3 db = Mat3::Zero();
  Vec3 du0 = dR.col(0), du1 = dR.col(1), du2 = dR.col(2);

  // u2 = normalize(q2), q2 = b2 - (u0.b2) u0 - (u1.b2) u1
  const Vec3 dq2 = normalize_vjp(q2, u2, du2);
  db.col(2) += dq2 - u0 * u0.dot(dq2) - u1 * u1.dot(dq2);
  du0 += -b.col(2) * dq2.dot(u0) - u0.dot(b.col(2)) * dq2;
  du1 += -b.col(2) * dq2.dot(u1) - u1.dot(b.col(2)) * dq2;

  // u1 = normalize(q1), q1 = b1 - (u0.b1) u0
  const Vec3 dq1 = normalize_vjp(q1, u1, du1);
  db.col(1) += dq1 - u0 * u0.dot(dq1);
  du0 += -b.col(1) * dq1.dot(u0) - u0.dot(b.col(1)) * dq1;

  // u0 = normalize(b0)
  db.col(0) += normalize_vjp(q0, u0, du0);
  return db;
}

WarpResult warp_to_canonical(const PosedBody& posed, const Vec3& x, Real cutoff, WarpMode mode) {
  WarpResult res;
  ClosestHit hit = posed.tree.closest(x);
  if (hit.tri < 0) return res;
  const Real dist = std::sqrt(hit.dist2) / posed.pose.scale;  // canonical units
  if (dist > cutoff) {
    res.tri = hit.tri;
    return res;
  }
  Vec3 bary = hit.bary;
  if (mode == WarpMode::kNearestVertex) {
    int k = 0;
    bary.maxCoeff(&k);
    bary = Vec3::Unit(k);
  }
  const BodyModel& body = *posed.body;
  Mat34 m = Mat34::Zero();
  for (int k = 0; k < 3; ++k) m += bary[k] * posed.vert_tf[body.mesh.faces(hit.tri, k)];
  const Mat3 rot = gram_schmidt(m.leftCols<3>());
  const Vec3 x_loc = (x - posed.pose.translation) / posed.pose.scale;
  res.canonical = rot.transpose() * (x_loc - m.col(3));
  res.supported = true;
  res.tri = hit.tri;
  res.bary = bary;
  return res;
}

std::vector<int> view_dir_sources(const Points& warped, Real tiny) {
  const long n = warped.rows();
  std::vector<int> src(n, -1);
  int last_valid = -1;
  for (long i = 1; i < n; ++i) {
    if ((warped.row(i) - warped.row(i - 1)).norm() >= tiny) last_valid = int(i);
    src[i] = last_valid;
  }
  // first sample copies the first valid difference
  int first_valid = -1;
  for (long i = 1; i < n && first_valid < 0; ++i)
    if (src[i] == int(i)) first_valid = int(i);
  for (long i = 0; i < n; ++i) {
    if (src[i] < 0) src[i] = first_valid;  // may stay -1 if all coincide
  }
  return src;
}

Points recompute_view_dirs(const Points& warped) {
  if (warped.rows() < 2) throw DataError("view dirs: need at least 2 samples");
  std::vector<int> src = view_dir_sources(warped);
  Points dirs(warped.rows(), 3);
  for (long i = 0; i < warped.rows(); ++i) {
    if (src[i] < 0) {
      dirs.row(i) = Vec3::UnitZ().transpose();  // fully degenerate ray
      continue;
    }
    Vec3 d = (warped.row(src[i]) - warped.row(src[i] - 1)).transpose();
    dirs.row(i) = d.normalized().transpose();
  }
  return dirs;
}

LbsBackward::LbsBackward(const BodyModel& body, const PosedBody& posed)
    : body_(body), posed_(posed) {
  dM_lin_.assign(body.mesh.verts.rows(), Mat3::Zero());
  dM_trans_.assign(body.mesh.verts.rows(), Vec3::Zero());
}

void LbsBackward::add_vertex_transform_grad(int v, const Mat3& dlin, const Vec3& dtrans) {
  dM_lin_[v] += dlin;
  dM_trans_[v] += dtrans;
}

void LbsBackward::add_vertex_position_grad(int v, const Vec3& dpos) {
  // p = s * (M_v.lin * vc + M_v.trans) + t
  const Real s = posed_.pose.scale;
  const Vec3 vc = body_.mesh.verts.row(v).transpose();
  dM_lin_[v] += s * dpos * vc.transpose();
  dM_trans_[v] += s * dpos;
  d_trans_ += dpos;
  d_scale_ += dpos.dot(posed_.vert_tf[v].leftCols<3>() * vc + posed_.vert_tf[v].col(3));
}

LbsBackward::PoseGrad LbsBackward::finish() {
  const int nj = body_.skel.size();
  std::vector<Mat3> dA_lin(nj, Mat3::Zero());
  std::vector<Vec3> dA_trans(nj, Vec3::Zero());
  for (long v = 0; v < body_.mesh.verts.rows(); ++v) {
    if (dM_lin_[v].isZero(0) && dM_trans_[v].isZero(0)) continue;
    const VertexWeights& w = body_.mesh.weights[v];
    for (int k = 0; k < w.count; ++k) {
      dA_lin[w.joint[k]] += w.w[k] * dM_lin_[v];
      dA_trans[w.joint[k]] += w.w[k] * dM_trans_[v];
    }
  }
  // A_j = W_j * Cinv_j: dW.lin = dA.lin * Cinv.lin^T + dA.trans * Cinv.trans^T
  std::vector<Mat3> dW_lin(nj);
  std::vector<Vec3> dW_trans(nj);
  for (int j = 0; j < nj; ++j) {
    const Aff3& cinv = body_.canon_world_inv[j];
    dW_lin[j] = dA_lin[j] * cinv.linear().transpose() + dA_trans[j] * cinv.translation().transpose();
    dW_trans[j] = dA_trans[j];
  }
  PoseGrad g;
  g.axis_angles =
      joint_chain_vjp(body_.skel, posed_.pose.axis_angles, posed_.joint_world, dW_lin, dW_trans);
  g.translation = d_trans_;
  g.scale = d_scale_;
  return g;
}

}  // namespace dfr::body
