#include "dfr/fields/encoding.hpp"

#include <cmath>
#include <vector>

#include "dfr/core/error.hpp"

namespace dfr::fields {

MatX positional_encode(const Eigen::Ref<const MatX>& x, const PosEncConfig& cfg) {
  if (!x.allFinite()) throw NumericError("positional_encode: non-finite input");
  const long s = x.rows(), d = x.cols();
  const int L = cfg.num_freq;
  MatX out(s, cfg.output_dim(int(d)));
  long off = 0;
  if (cfg.include_input) {
    out.leftCols(d) = x;
    off = d;
  }
  for (int k = 0; k < L; ++k) {
    const Real f = Real(std::pow(2.0, k)) * Real(M_PI);
    out.middleCols(off + k * d, d) = (x * f).array().sin();
    out.middleCols(off + (L + k) * d, d) = (x * f).array().cos();
  }
  return out;
}

VecX positional_encode_vec(const VecX& x, const PosEncConfig& cfg) {
  MatX m = positional_encode(MatX(x.transpose()), cfg);
  return m.row(0).transpose();
}

ad::Val emit_positional_encode(ad::Val x, const PosEncConfig& cfg) {
  std::vector<ad::Val> blocks;
  if (cfg.include_input) blocks.push_back(x);
  std::vector<ad::Val> coss;
  for (int k = 0; k < cfg.num_freq; ++k) {
    const Real f = Real(std::pow(2.0, k)) * Real(M_PI);
    ad::Val xs = ad::scalar_mul(x, f);
    blocks.push_back(ad::sin(xs));
    coss.push_back(ad::cos(xs));
  }
  blocks.insert(blocks.end(), coss.begin(), coss.end());
  return ad::concat_cols(blocks);
}

}  // namespace dfr::fields
