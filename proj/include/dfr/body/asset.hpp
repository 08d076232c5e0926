#pragma once

#include <string>

#include "dfr/body/mesh.hpp"
#include "dfr/body/skeleton.hpp"

namespace dfr::body {

// Articulated watertight body: canonical mesh (authored in the canonical
// pose), skeleton, skin weights, and the canonical pose vector whose
// world transforms the skinning is relative to.
struct BodyModel {
  Skeleton skel;
  SkinnedMesh mesh;
  PoseParams canonical;           // abducted-limbs pose
  std::vector<Aff3> canon_world;  // joint transforms at `canonical`
  std::vector<Aff3> canon_world_inv;
  MeshTree canonical_tree;        // over the canonical mesh

  void finalize();  // validates and precomputes the members above
};

// Mesh file: ASCII OBJ subset (v/f lines only).
Points load_obj_vertices(const std::string& path, Triangles& faces);
void save_obj(const std::string& path, const Points& verts, const Triangles& faces);

// Skeleton + weights + canonical pose + feet indices as one JSON file.
BodyModel load_body_model(const std::string& obj_path, const std::string& rig_path);
void save_rig(const std::string& path, const BodyModel& body);

// Per-frame pose file: JSON array of
//   {frame, axis_angles: [[x,y,z]...], translation: [x,y,z], scale}
std::vector<PoseParams> load_pose_sequence(const std::string& path, int num_joints);
void save_pose_sequence(const std::string& path, const std::vector<PoseParams>& poses);

}  // namespace dfr::body
