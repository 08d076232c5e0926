#include "support/humanoid.hpp"

#include <cmath>

namespace dfr::test {

using namespace dfr::body;

namespace {

constexpr Real kPi = Real(M_PI);

struct PrismSpec {
  Vec3 a, b;        // segment endpoints in canonical (posed) space
  Real half_x, half_y;
  int joint_a;      // driving joint
  int joint_b;      // blend target near the far end (-1: none)
  int rings;
  bool is_foot = false;
};

// Orthonormal frame with z along the segment.
void segment_frame(const Vec3& a, const Vec3& b, Vec3& ex, Vec3& ey, Vec3& ez) {
  ez = (b - a).normalized();
  Vec3 up = std::abs(ez.z()) < Real(0.9) ? Vec3::UnitZ() : Vec3::UnitX();
  ex = up.cross(ez).normalized();
  ey = ez.cross(ex);
}

}  // namespace

BodyModel make_humanoid() {
  BodyModel m;
  auto add_joint = [&](const char* name, int parent, Real x, Real y, Real z) {
    m.skel.joints.push_back({name, parent, Vec3(x, y, z)});
    return int(m.skel.joints.size()) - 1;
  };
  // rest pose: arms and legs straight down, +x left, +y forward, +z up
  const int pelvis = add_joint("pelvis", -1, 0, 0, 0);
  const int spine = add_joint("spine", pelvis, 0, 0, 0.15);
  const int chest = add_joint("chest", spine, 0, 0, 0.20);
  const int head = add_joint("head", chest, 0, 0, 0.22);
  const int l_sho = add_joint("l_shoulder", chest, 0.19, 0, 0.16);
  const int l_elb = add_joint("l_elbow", l_sho, 0, 0, -0.27);
  const int l_wri = add_joint("l_wrist", l_elb, 0, 0, -0.26);
  const int r_sho = add_joint("r_shoulder", chest, -0.19, 0, 0.16);
  const int r_elb = add_joint("r_elbow", r_sho, 0, 0, -0.27);
  const int r_wri = add_joint("r_wrist", r_elb, 0, 0, -0.26);
  const int l_hip = add_joint("l_hip", pelvis, 0.10, 0, -0.03);
  const int l_kne = add_joint("l_knee", l_hip, 0, 0, -0.40);
  const int l_ank = add_joint("l_ankle", l_kne, 0, 0, -0.40);
  const int r_hip = add_joint("r_hip", pelvis, -0.10, 0, -0.03);
  const int r_kne = add_joint("r_knee", r_hip, 0, 0, -0.40);
  const int r_ank = add_joint("r_ankle", r_kne, 0, 0, -0.40);

  // canonical pose: shoulders abducted 45 degrees, hips 15
  m.canonical = PoseParams::rest(m.skel.size());
  m.canonical.axis_angles.row(l_sho) << 0, -kPi / 4, 0;
  m.canonical.axis_angles.row(r_sho) << 0, kPi / 4, 0;
  m.canonical.axis_angles.row(l_hip) << 0, -kPi / 12, 0;
  m.canonical.axis_angles.row(r_hip) << 0, kPi / 12, 0;

  std::vector<Aff3> W = joint_world_transforms(m.skel, m.canonical.axis_angles);
  auto jp = [&](int j) { return Vec3(W[j].translation()); };
  auto jdir = [&](int j, const Vec3& local) { return Vec3(W[j].linear() * local); };

  std::vector<PrismSpec> prisms;
  // torso stack
  prisms.push_back({jp(pelvis) + Vec3(0, 0, -0.10), jp(spine), 0.13, 0.085, pelvis, spine, 4, false});
  prisms.push_back({jp(spine), jp(chest), 0.125, 0.08, spine, chest, 4, false});
  prisms.push_back({jp(chest), jp(head), 0.14, 0.09, chest, head, 4, false});
  prisms.push_back({jp(head) + Vec3(0, 0, 0.015), jp(head) + Vec3(0, 0.02, 0.21), 0.075, 0.09,
                    head, -1, 3, false});
  // arms: upper (shoulder->elbow), forearm (elbow->wrist), hand stub
  auto arm = [&](int sho, int elb, int wri) {
    prisms.push_back({jp(sho), jp(elb), 0.041, 0.055, sho, elb, 4, false});
    prisms.push_back({jp(elb), jp(wri), 0.033, 0.046, elb, wri, 4, false});
    Vec3 hd = jdir(wri, Vec3(0, 0, -1));
    prisms.push_back({jp(wri), jp(wri) + 0.16 * hd, 0.022, 0.05, wri, -1, 3, false});
  };
  arm(l_sho, l_elb, l_wri);
  arm(r_sho, r_elb, r_wri);
  // legs: thigh, calf, foot
  auto leg = [&](int hip, int kne, int ank) {
    prisms.push_back({jp(hip), jp(kne), 0.062, 0.078, hip, kne, 5, false});
    prisms.push_back({jp(kne), jp(ank), 0.048, 0.062, kne, ank, 4, false});
    PrismSpec foot{jp(ank) + Vec3(0, -0.04, -0.035), jp(ank) + Vec3(0, 0.15, -0.035), 0.045,
                   0.038, ank, -1, 3};
    foot.is_foot = true;
    prisms.push_back(foot);
  };
  leg(l_hip, l_kne, l_ank);
  leg(r_hip, r_kne, r_ank);

  // build the prisms with a small gap at each joint so canonical segments
  // never overlap (parity inside-test requirement)
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::vector<VertexWeights> weights;
  const Real gap = 0.008;
  const int C = 8;  // octagonal cross-section

  for (const PrismSpec& ps : prisms) {
    Vec3 ex, ey, ez;
    segment_frame(ps.a, ps.b, ex, ey, ez);
    const Vec3 a = ps.a + gap * ez, b = ps.b - gap * ez;
    const int base = int(verts.size());
    const int K = ps.rings;
    for (int r = 0; r < K; ++r) {
      const Real t = Real(r) / Real(K - 1);
      const Vec3 c = a + t * (b - a);
      for (int k = 0; k < C; ++k) {
        const Real ang = (Real(k) + Real(0.5)) / C * 2 * kPi;
        verts.push_back(c + ps.half_x * std::cos(ang) * ex + ps.half_y * std::sin(ang) * ey);
        VertexWeights w;
        if (ps.joint_b >= 0 && t > Real(0.65)) {
          const Real wb = Real(0.5) * (t - Real(0.65)) / Real(0.35);
          w.joint[0] = ps.joint_a;
          w.w[0] = 1 - wb;
          w.joint[1] = ps.joint_b;
          w.w[1] = wb;
          w.count = 2;
        } else {
          w.joint[0] = ps.joint_a;
          w.w[0] = 1;
          w.count = 1;
        }
        weights.push_back(w);
      }
    }
    // side walls, outward-facing
    for (int r = 0; r + 1 < K; ++r) {
      const int lo = base + C * r, hi = lo + C;
      for (int k = 0; k < C; ++k) {
        const int kn = (k + 1) % C;
        faces.push_back({lo + k, lo + kn, hi + kn});
        faces.push_back({lo + k, hi + kn, hi + k});
      }
    }
    // cap fans
    for (int k = 1; k + 1 < C; ++k) faces.push_back({base, base + k + 1, base + k});
    const int top = base + C * (K - 1);
    for (int k = 1; k + 1 < C; ++k) faces.push_back({top, top + k, top + k + 1});
  }

  m.mesh.verts.resize(long(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) m.mesh.verts.row(long(i)) = verts[i].transpose();
  m.mesh.faces.resize(long(faces.size()), 3);
  for (size_t i = 0; i < faces.size(); ++i)
    m.mesh.faces.row(long(i)) << faces[i][0], faces[i][1], faces[i][2];
  m.mesh.weights = weights;

  // feet contact set: bottom corners of the two foot prisms
  Real min_z = m.mesh.verts.col(2).minCoeff();
  for (long v = 0; v < m.mesh.verts.rows(); ++v)
    if (m.mesh.verts(v, 2) < min_z + Real(0.01)) m.mesh.feet.push_back(int(v));

  m.finalize();
  return m;
}

Points humanoid_vertex_colors(const body::BodyModel& body) {
  const Points& v = body.mesh.verts;
  Points c(v.rows(), 3);
  for (long i = 0; i < v.rows(); ++i) {
    const Real x = v(i, 0), y = v(i, 1), z = v(i, 2);
    c(i, 0) = Real(0.55) + Real(0.25) * std::sin(Real(2.1) * z + Real(0.6));
    c(i, 1) = Real(0.45) + Real(0.25) * std::cos(Real(1.7) * x + Real(2.8) * z);
    c(i, 2) = Real(0.50) + Real(0.30) * std::sin(Real(2.3) * y - Real(1.2) * z + 1);
    for (int k = 0; k < 3; ++k) c(i, k) = std::min(Real(1), std::max(Real(0), c(i, k)));
  }
  return c;
}

}  // namespace dfr::test
