#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace dfr {

#ifdef DFR_REAL_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Vec4 = Eigen::Matrix<Real, 4, 1>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using Mat4 = Eigen::Matrix<Real, 4, 4>;
using Aff3 = Eigen::Transform<Real, 3, Eigen::Affine>;

using ArrX = Eigen::Array<Real, Eigen::Dynamic, 1>;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// Point sets as rows, one point per row.
using Points = Eigen::Matrix<Real, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<Real, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Triangles = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Shape = std::vector<int>;

inline long numel(const Shape& s) {
  long n = 1;
  for (int d : s) n *= d;
  return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

}  // namespace dfr
