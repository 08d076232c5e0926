#include "dfr/body/warp.hpp"

#include "dfr/core/error.hpp"

namespace dfr::body {

using ad::Val;

namespace {

struct WarpOp : ad::CustomOp {
  std::shared_ptr<const PosedBody> posed;
  Points x;  // observation-space sample positions
  std::vector<WarpResult> hits;

  void backward(const ArrX& grad_out, ad::Graph& g, const ad::Node& self) override {
    const BodyModel& body = *posed->body;
    LbsBackward lb(body, *posed);
    Vec3 d_trans = Vec3::Zero();
    Real d_scale = 0;
    const Real s = posed->pose.scale;
    for (long i = 0; i < x.rows(); ++i) {
      const WarpResult& h = hits[i];
      Vec3 gx(grad_out[i * 3], grad_out[i * 3 + 1], grad_out[i * 3 + 2]);
      if (h.tri < 0 || gx.isZero(0)) continue;
      Mat34 m = Mat34::Zero();
      for (int k = 0; k < 3; ++k)
        m += h.bary[k] * posed->vert_tf[body.mesh.faces(h.tri, k)];
      const Mat3 rot = gram_schmidt(m.leftCols<3>());
      const Vec3 x_loc = (Vec3(x.row(i).transpose()) - posed->pose.translation) / s;
      const Vec3 u = x_loc - m.col(3);

      const Vec3 du = rot * gx;          // x' = rot^T u
      const Mat3 dRot = u * gx.transpose();
      const Vec3 dm3 = -du;
      d_trans += -du / s;                // x_loc = (x - t)/s
      d_scale += du.dot(-x_loc / s);
      const Mat3 dB = gram_schmidt_vjp(m.leftCols<3>(), dRot);
      for (int k = 0; k < 3; ++k)
        lb.add_vertex_transform_grad(body.mesh.faces(h.tri, k), h.bary[k] * dB,
                                     h.bary[k] * dm3);
    }
    LbsBackward::PoseGrad pg = lb.finish();
    const long nj = pg.axis_angles.rows();
    ArrX daa(nj * 3);
    for (long j = 0; j < nj; ++j)
      for (int k = 0; k < 3; ++k) daa[j * 3 + k] = pg.axis_angles(j, k);
    g.accum_grad(self.in[0], daa);
    ArrX dt(3);
    dt << d_trans.x(), d_trans.y(), d_trans.z();
    g.accum_grad(self.in[1], dt);
    g.accum_grad(self.in[2], ArrX::Constant(1, d_scale));
  }
};

}  // namespace

WarpBatch emit_warp(ad::Graph& g, std::shared_ptr<const PosedBody> posed, const Points& x,
                    ad::Tensor& axis_angles, ad::Tensor& translation, ad::Tensor& scale,
                    Real cutoff, WarpMode mode) {
  if (!x.allFinite()) throw NumericError("warp: non-finite sample positions");
  auto op = std::make_shared<WarpOp>();
  op->posed = posed;
  op->x = x;
  op->hits.resize(x.rows());

  ArrX out(x.rows() * 3);
  WarpBatch res;
  res.supported.resize(x.rows());
  for (long i = 0; i < x.rows(); ++i) {
    WarpResult h = warp_to_canonical(*posed, x.row(i).transpose(), cutoff, mode);
    op->hits[i] = h;
    res.supported[i] = h.supported ? 1 : 0;
    out.segment(i * 3, 3) << h.canonical.x(), h.canonical.y(), h.canonical.z();
  }
  Val leaves[3] = {g.leaf(axis_angles), g.leaf(translation), g.leaf(scale)};
  res.warped = g.custom({int(x.rows()), 3}, std::move(out), leaves, op);
  return res;
}

Val emit_view_dirs(Val warped_ray, const std::vector<int>& sources) {
  ad::Graph& g = *warped_ray.g;
  const Shape& s = warped_ray.shape();
  if (s.size() != 2 || s[1] != 3) throw DataError("view dirs: [N,3] input required");
  const int n = s[0];
  if (n < 2) throw DataError("view dirs: need at least 2 samples");
  if (int(sources.size()) != n) throw DataError("view dirs: sources size mismatch");

  // all diffs x_i - x_{i-1} for i in [1, n)
  Val diffs = ad::sub(ad::slice_rows(warped_ray, 1, n - 1), ad::slice_rows(warped_ray, 0, n - 1));
  // select the source diff per sample (coincident samples reuse the
  // previous valid one); pick rows via a small permutation matrix
  MatX sel = MatX::Zero(n, n - 1);
  for (int i = 0; i < n; ++i) {
    if (sources[i] < 1)
      throw NumericError("view dirs: ray with no usable sample differences");
    sel(i, sources[i] - 1) = 1;
  }
  Val vsel = g.constant({n, n - 1}, ArrX(Eigen::Map<const ArrX>(sel.data(), sel.size())));
  Val picked = ad::matmul(vsel, diffs);  // [n,3]
  // normalize rows: d / sqrt(sum d^2)
  Val nrm2 = ad::row_sum(ad::square(picked));
  Val nrm = ad::sqrt(nrm2);
  Val denom = ad::reshape(nrm, {n, 1});
  return ad::div(picked, denom);
}

ad::Val emit_view_dirs_batch(ad::Val warped, int rays, int samples,
                             const std::vector<int>& sources) {
  ad::Graph& g = *warped.g;
  const Shape& s = warped.shape();
  if (s.size() != 2 || s[1] != 3 || s[0] != rays * samples)
    throw DataError("view dirs: [R*N,3] input required");
  if (int(sources.size()) != rays * samples) throw DataError("view dirs: sources size mismatch");

  // per-ray gather indices into the local diff columns
  std::vector<int> idx(sources.size());
  for (int r = 0; r < rays; ++r)
    for (int i = 0; i < samples; ++i) {
      int src = sources[r * samples + i];
      if (src < 1) throw NumericError("view dirs: ray with no usable sample differences");
      idx[r * samples + i] = src - 1;
    }

  Val ch[3], d[3];
  for (int c = 0; c < 3; ++c) {
    Val col = ad::reshape(ad::slice_cols(warped, c, 1), {rays, samples});
    Val diff = ad::sub(ad::slice_cols(col, 1, samples - 1), ad::slice_cols(col, 0, samples - 1));
    d[c] = ad::gather_cols(diff, idx, samples);  // [R,N]
  }
  Val nrm = ad::sqrt(ad::add(ad::add(ad::square(d[0]), ad::square(d[1])), ad::square(d[2])));
  for (int c = 0; c < 3; ++c)
    ch[c] = ad::reshape(ad::div(d[c], nrm), {rays * samples, 1});
  std::vector<Val> cols = {ch[0], ch[1], ch[2]};
  return ad::concat_cols(cols);
}

}  // namespace dfr::body
