#include "dfr/body/asset.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dfr/core/error.hpp"

namespace dfr::body {

using nlohmann::json;

void BodyModel::finalize() {
  skel.validate();
  mesh.validate();
  mesh.check_watertight();
  canonical.validate(skel.size());
  canon_world = joint_world_transforms(skel, canonical.axis_angles);
  canon_world_inv.resize(canon_world.size());
  for (size_t j = 0; j < canon_world.size(); ++j) canon_world_inv[j] = canon_world[j].inverse();
  canonical_tree = MeshTree(mesh.verts, mesh.faces);
}

Points load_obj_vertices(const std::string& path, Triangles& faces) {
  std::ifstream is(path);
  if (!is) throw DataError("obj: cannot open " + path);
  std::vector<Vec3> vs;
  std::vector<std::array<int, 3>> fs;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) throw DataError("obj: bad vertex at " + path + ":" + std::to_string(lineno));
      vs.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f;
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        ss >> tok;
        if (tok.empty()) throw DataError("obj: bad face at " + path + ":" + std::to_string(lineno));
        f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;  // 1-based
      }
      fs.push_back(f);
    }
    // other tags ignored (subset format)
  }
  Points verts(long(vs.size()), 3);
  for (size_t i = 0; i < vs.size(); ++i) verts.row(long(i)) = vs[i].transpose();
  faces.resize(long(fs.size()), 3);
  for (size_t i = 0; i < fs.size(); ++i)
    faces.row(long(i)) << fs[i][0], fs[i][1], fs[i][2];
  return verts;
}

void save_obj(const std::string& path, const Points& verts, const Triangles& faces) {
  std::ofstream os(path);
  if (!os) throw DataError("obj: cannot write " + path);
  os.precision(17);
  for (long v = 0; v < verts.rows(); ++v)
    os << "v " << verts(v, 0) << " " << verts(v, 1) << " " << verts(v, 2) << "\n";
  for (long f = 0; f < faces.rows(); ++f)
    os << "f " << faces(f, 0) + 1 << " " << faces(f, 1) + 1 << " " << faces(f, 2) + 1 << "\n";
}

namespace {

json pose_to_json(const PoseParams& p) {
  json aa = json::array();
  for (long j = 0; j < p.axis_angles.rows(); ++j)
    aa.push_back({p.axis_angles(j, 0), p.axis_angles(j, 1), p.axis_angles(j, 2)});
  return {{"axis_angles", aa},
          {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
          {"scale", p.scale}};
}

PoseParams pose_from_json(const json& jp, int num_joints) {
  PoseParams p;
  const auto& aa = jp.at("axis_angles");
  p.axis_angles = MatX::Zero(long(aa.size()), 3);
  for (size_t j = 0; j < aa.size(); ++j)
    for (int k = 0; k < 3; ++k) p.axis_angles(long(j), k) = aa[j][k].get<Real>();
  const auto& t = jp.at("translation");
  p.translation = Vec3(t[0].get<Real>(), t[1].get<Real>(), t[2].get<Real>());
  p.scale = jp.value("scale", Real(1));
  p.validate(num_joints);
  return p;
}

}  // namespace

BodyModel load_body_model(const std::string& obj_path, const std::string& rig_path) {
  BodyModel body;
  body.mesh.verts = load_obj_vertices(obj_path, body.mesh.faces);

  std::ifstream is(rig_path);
  if (!is) throw DataError("rig: cannot open " + rig_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("rig: parse error in " + rig_path + ": " + e.what());
  }
  try {
    for (const auto& jj : j.at("joints")) {
      Joint joint;
      joint.name = jj.at("name").get<std::string>();
      joint.parent = jj.at("parent").get<int>();
      const auto& off = jj.at("offset");
      joint.offset = Vec3(off[0].get<Real>(), off[1].get<Real>(), off[2].get<Real>());
      body.skel.joints.push_back(joint);
    }
    const auto& jw = j.at("weights");
    if (long(jw.size()) != body.mesh.verts.rows())
      throw DataError("rig: weight count != vertex count in " + rig_path);
    for (const auto& wv : jw) {
      VertexWeights w;
      for (const auto& pair : wv) {
        if (w.count >= 4) throw DataError("rig: more than 4 weights per vertex");
        w.joint[w.count] = pair[0].get<int>();
        w.w[w.count] = pair[1].get<Real>();
        ++w.count;
      }
      body.mesh.weights.push_back(w);
    }
    body.canonical = pose_from_json(j.at("canonical_pose"), body.skel.size());
    for (const auto& f : j.at("feet")) body.mesh.feet.push_back(f.get<int>());
  } catch (const json::exception& e) {
    throw DataError("rig: bad schema in " + rig_path + ": " + e.what());
  }
  body.finalize();
  return body;
}

void save_rig(const std::string& path, const BodyModel& body) {
  json joints = json::array();
  for (const Joint& jt : body.skel.joints)
    joints.push_back({{"name", jt.name},
                      {"parent", jt.parent},
                      {"offset", {jt.offset.x(), jt.offset.y(), jt.offset.z()}}});
  json weights = json::array();
  for (const VertexWeights& w : body.mesh.weights) {
    json wv = json::array();
    for (int k = 0; k < w.count; ++k) wv.push_back({w.joint[k], w.w[k]});
    weights.push_back(wv);
  }
  json j = {{"joints", joints},
            {"weights", weights},
            {"canonical_pose", pose_to_json(body.canonical)},
            {"feet", body.mesh.feet}};
  std::ofstream os(path);
  if (!os) throw DataError("rig: cannot write " + path);
  os << j.dump(1) << "\n";
}

std::vector<PoseParams> load_pose_sequence(const std::string& path, int num_joints) {
  std::ifstream is(path);
  if (!is) throw DataError("poses: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("poses: parse error in " + path + ": " + e.what());
  }
  std::vector<PoseParams> out;
  try {
    for (const auto& jp : j) {
      size_t frame = jp.at("frame").get<size_t>();
      if (frame != out.size())
        throw DataError("poses: frames must be contiguous from 0 in " + path);
      out.push_back(pose_from_json(jp, num_joints));
    }
  } catch (const json::exception& e) {
    throw DataError("poses: bad schema in " + path + ": " + e.what());
  }
  return out;
}

void save_pose_sequence(const std::string& path, const std::vector<PoseParams>& poses) {
  json j = json::array();
  for (size_t f = 0; f < poses.size(); ++f) {
    json jp = pose_to_json(poses[f]);
    jp["frame"] = f;
    j.push_back(jp);
  }
  std::ofstream os(path);
  if (!os) throw DataError("poses: cannot write " + path);
  os << j.dump(1) << "\n";
}

}  // namespace dfr::body
