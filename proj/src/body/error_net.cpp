#include "dfr/body/error_net.hpp"

#include <cmath>

#include "dfr/core/error.hpp"

namespace dfr::body {

using ad::Tensor;
using ad::Val;

ErrorNet ErrorNet::init(int num_frames, Rng& rng) {
  ErrorNet n;
  n.num_frames = num_frames;
  const int in = n.enc.output_dim(3) + n.latent_dim;
  n.w0 = Tensor::randn({in, n.hidden}, rng, Real(std::sqrt(2.0 / in)));
  n.b0 = Tensor::zeros({n.hidden});
  n.w1 = Tensor::randn({n.hidden, n.hidden}, rng, Real(std::sqrt(2.0 / n.hidden)));
  n.b1 = Tensor::zeros({n.hidden});
  n.w2 = Tensor::zeros({n.hidden, 3});
  n.b2 = Tensor::zeros({3});
  n.latents = Tensor::zeros({num_frames, n.latent_dim});
  return n;
}

Val ErrorNet::emit(ad::Graph& g, const Points& x, int frame) {
  if (frame < 0 || frame >= num_frames)
    throw DataError("error net: frame " + std::to_string(frame) + " outside training set");
  const int s = int(x.rows());
  MatX enc_x = fields::positional_encode(MatX(x), enc);
  Val ve = g.constant({s, int(enc_x.cols())},
                      ArrX(Eigen::Map<const ArrX>(enc_x.data(), enc_x.size())));
  Val lat = ad::slice_rows(g.leaf(latents), frame, 1);            // [1,L]
  Val tiled = ad::add(g.constant({s, latent_dim}, ArrX::Zero(long(s) * latent_dim)), lat);
  std::vector<Val> cat = {ve, tiled};
  Val h = ad::relu(ad::add(ad::matmul(ad::concat_cols(cat), g.leaf(w0)), g.leaf(b0)));
  h = ad::relu(ad::add(ad::matmul(h, g.leaf(w1)), g.leaf(b1)));
  return ad::add(ad::matmul(h, g.leaf(w2)), g.leaf(b2));
}

std::vector<std::pair<std::string, Tensor*>> ErrorNet::named() {
  return {{"error.l0.w", &w0}, {"error.l0.b", &b0}, {"error.l1.w", &w1},
          {"error.l1.b", &b1}, {"error.l2.w", &w2}, {"error.l2.b", &b2},
          {"error.latents", &latents}};
}

std::vector<std::pair<std::string, const Tensor*>> ErrorNet::named() const {
  auto mut = const_cast<ErrorNet*>(this)->named();
  return {mut.begin(), mut.end()};
}

void ErrorNet::load(const std::map<std::string, Tensor>& ckpt) {
  for (auto& [name, t] : named()) {
    auto it = ckpt.find(name);
    if (it == ckpt.end()) throw DataError("checkpoint missing parameter: " + name);
    if (it->second.shape != t->shape) throw DataError("checkpoint shape mismatch: " + name);
    t->data = it->second.data;
  }
  num_frames = latents.shape[0];
}

}  // namespace dfr::body
