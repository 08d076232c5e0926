#include "dfr/fields/field.hpp"

#include <cmath>

#include "dfr/ad/kernels.hpp"
#include "dfr/core/error.hpp"

namespace dfr::fields {

using ad::Tensor;
using ad::Val;

FieldParams FieldParams::init(const FieldConfig& cfg, Rng& rng) {
  FieldParams p;
  p.cfg = cfg;
  int in = cfg.enc_x.output_dim(3);
  for (int i = 0; i < cfg.hidden_layers; ++i) {
    int out = cfg.width;
    p.w.push_back(Tensor::randn({in, out}, rng, Real(std::sqrt(2.0 / in))));
    p.b.push_back(Tensor::zeros({out}));
    in = out;
  }
  p.sigma_w = Tensor::randn({cfg.width, 1}, rng, Real(std::sqrt(2.0 / cfg.width)));
  p.sigma_b = Tensor::zeros({1});
  const int cin = cfg.width + cfg.enc_d.output_dim(3);
  p.color_w0 = Tensor::randn({cin, cfg.color_hidden}, rng, Real(std::sqrt(2.0 / cin)));
  p.color_b0 = Tensor::zeros({cfg.color_hidden});
  p.color_w1 =
      Tensor::randn({cfg.color_hidden, 3}, rng, Real(std::sqrt(2.0 / cfg.color_hidden)));
  p.color_b1 = Tensor::zeros({3});
  return p;
}

std::vector<std::pair<std::string, Tensor*>> FieldParams::named(const std::string& prefix) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (size_t i = 0; i < w.size(); ++i) {
    out.emplace_back(prefix + ".l" + std::to_string(i) + ".w", &w[i]);
    out.emplace_back(prefix + ".l" + std::to_string(i) + ".b", &b[i]);
  }
  out.emplace_back(prefix + ".sigma.w", &sigma_w);
  out.emplace_back(prefix + ".sigma.b", &sigma_b);
  out.emplace_back(prefix + ".rgb0.w", &color_w0);
  out.emplace_back(prefix + ".rgb0.b", &color_b0);
  out.emplace_back(prefix + ".rgb1.w", &color_w1);
  out.emplace_back(prefix + ".rgb1.b", &color_b1);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> FieldParams::named(
    const std::string& prefix) const {
  auto mut = const_cast<FieldParams*>(this)->named(prefix);
  std::vector<std::pair<std::string, const Tensor*>> out(mut.begin(), mut.end());
  return out;
}

void FieldParams::load(const std::map<std::string, Tensor>& ckpt, const std::string& prefix) {
  for (auto& [name, t] : named(prefix)) {
    auto it = ckpt.find(name);
    if (it == ckpt.end()) throw DataError("checkpoint missing parameter: " + name);
    if (it->second.shape != t->shape) throw DataError("checkpoint shape mismatch: " + name);
    t->data = it->second.data;
  }
}

namespace {

// y = relu(x * W + b); same per-element operation order as the graph ops
// so the pure and graph paths agree bit-for-bit.
void linear(const MatX& x, const Tensor& w, const Tensor& bias, MatX& y) {
  const long s = x.rows(), in = x.cols(), out = w.shape[1];
  if (in != w.shape[0]) throw DataError("field: layer shape mismatch");
  y.resize(s, out);
  ad::matmul_nn(x.data(), w.data.data(), y.data(), s, in, out);
  for (long r = 0; r < s; ++r)
    for (long c = 0; c < out; ++c) y(r, c) += bias.data[c];
}

void relu_inplace(MatX& y) {
  Real* p = y.data();
  for (long i = 0; i < y.size(); ++i) p[i] = p[i] > 0 ? p[i] : 0;
}

MatX trunk_forward(const FieldParams& p, const Points& x) {
  if (!x.allFinite()) throw NumericError("eval_field: non-finite position");
  MatX h = positional_encode(MatX(x), p.cfg.enc_x);
  MatX h2;
  for (size_t i = 0; i < p.w.size(); ++i) {
    linear(h, p.w[i], p.b[i], h2);
    relu_inplace(h2);
    std::swap(h, h2);
  }
  return h;
}

Points normalized_dirs(const Points& d) {
  Points out = d;
  for (long r = 0; r < d.rows(); ++r) {
    const Real n = d.row(r).norm();
    if (!(std::abs(n - 1) <= Real(1e-3)))
      throw DataError("eval_field: view direction not unit length (|d|=" + std::to_string(n) +
                      ")");
    // Already unit to rounding: keep bits so repeated normalization is a
    // no-op (training and rendering paths must agree exactly).
    if (std::abs(n - 1) > Real(1e-9)) out.row(r) /= n;
  }
  return out;
}

}  // namespace

void eval_field_batch(const FieldParams& p, const Points& x, const Points& d, ArrX& sigma,
                      Points& rgb) {
  if (x.rows() != d.rows()) throw DataError("eval_field: x/d row mismatch");
  MatX h = trunk_forward(p, x);
  const long s = h.rows();

  MatX sig;
  linear(h, p.sigma_w, p.sigma_b, sig);
  sigma.resize(s);
  for (long r = 0; r < s; ++r) sigma[r] = sig(r, 0) > 0 ? sig(r, 0) : 0;

  MatX ed = positional_encode(MatX(normalized_dirs(d)), p.cfg.enc_d);
  MatX hd(s, h.cols() + ed.cols());
  hd << h, ed;
  MatX y;
  linear(hd, p.color_w0, p.color_b0, y);
  relu_inplace(y);
  MatX c;
  linear(y, p.color_w1, p.color_b1, c);
  rgb.resize(s, 3);
  for (long r = 0; r < s; ++r)
    for (int j = 0; j < 3; ++j) rgb(r, j) = Real(1) / (Real(1) + std::exp(-c(r, j)));
}

void eval_field_density(const FieldParams& p, const Points& x, ArrX& sigma) {
  MatX h = trunk_forward(p, x);
  MatX sig;
  linear(h, p.sigma_w, p.sigma_b, sig);
  sigma.resize(h.rows());
  for (long r = 0; r < h.rows(); ++r) sigma[r] = sig(r, 0) > 0 ? sig(r, 0) : 0;
}

FieldOutput eval_field(const FieldParams& p, const Vec3& x, const Vec3& d) {
  Points xp(1, 3), dp(1, 3);
  xp.row(0) = x.transpose();
  dp.row(0) = d.transpose();
  ArrX sigma;
  Points rgb;
  eval_field_batch(p, xp, dp, sigma, rgb);
  return {rgb.row(0).transpose(), sigma[0]};
}

namespace {

Val emit_trunk(ad::Graph& g, FieldParams& p, Val enc_x) {
  Val h = enc_x;
  for (size_t i = 0; i < p.w.size(); ++i)
    h = ad::relu(ad::add(ad::matmul(h, g.leaf(p.w[i])), g.leaf(p.b[i])));
  return h;
}

}  // namespace

FieldVals emit_field(ad::Graph& g, FieldParams& p, Val enc_x, Val enc_d) {
  Val h = emit_trunk(g, p, enc_x);
  const int s = g.shape(h.id)[0];
  Val sigma = ad::relu(ad::add(ad::matmul(h, g.leaf(p.sigma_w)), g.leaf(p.sigma_b)));
  sigma = ad::reshape(sigma, {s});
  std::vector<Val> cat = {h, enc_d};
  Val y = ad::relu(
      ad::add(ad::matmul(ad::concat_cols(cat), g.leaf(p.color_w0)), g.leaf(p.color_b0)));
  Val rgb = ad::sigmoid(ad::add(ad::matmul(y, g.leaf(p.color_w1)), g.leaf(p.color_b1)));
  return {sigma, rgb};
}

Val emit_field_density(ad::Graph& g, FieldParams& p, Val enc_x) {
  Val h = emit_trunk(g, p, enc_x);
  const int s = g.shape(h.id)[0];
  Val sigma = ad::relu(ad::add(ad::matmul(h, g.leaf(p.sigma_w)), g.leaf(p.sigma_b)));
  return ad::reshape(sigma, {s});
}

}  // namespace dfr::fields
