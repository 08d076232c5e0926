#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfr/core/error.hpp"
#include "dfr/fields/field.hpp"
#include "support/gradcheck.hpp"

using namespace dfr;
using namespace dfr::fields;

TEST_CASE("positional encoding basics") {
  PosEncConfig cfg{4, true};
  VecX x = Vec3(0, 0, 0);
  VecX e = positional_encode_vec(x, cfg);
  REQUIRE(e.size() == 3 * (2 * 4 + 1));
  // all sin terms 0, all cos terms 1
  for (int i = 3; i < 3 + 12; ++i) CHECK(e[i] == 0);
  for (int i = 15; i < 27; ++i) CHECK(e[i] == 1);

  PosEncConfig cfg10{10, true};
  CHECK(cfg10.output_dim(3) == 63);

  PosEncConfig cfg1{1, true};
  VecX y = positional_encode_vec(VecX(Vec3(0.5, 0, 0)), cfg1);
  // layout: input(3), sin block(3), cos block(3); first sin slot = sin(pi/2)
  CHECK(y[3] == doctest::Approx(1.0));
}

TEST_CASE("positional encoding graph path matches pure path") {
  Rng rng(3);
  PosEncConfig cfg{6, true};
  Points x(5, 3);
  for (long i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2, 2);
  MatX pure = positional_encode(MatX(x), cfg);
  ad::Graph g;
  ad::Val v = emit_positional_encode(g.constant({5, 3}, ArrX(Eigen::Map<const ArrX>(x.data(), x.size()))), cfg);
  for (long i = 0; i < pure.size(); ++i) CHECK(v.data()[i] == pure.data()[i]);
}

TEST_CASE("zero parameters give gray and zero density") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 16;
  cfg.color_hidden = 8;
  Rng rng(1);
  FieldParams p = FieldParams::init(cfg, rng);
  for (auto& [name, t] : p.named("f")) t->data.setZero();
  FieldOutput out = eval_field(p, Vec3(0.3, -0.2, 0.5), Vec3(0, 0, 1));
  CHECK(out.sigma == 0);
  CHECK(out.rgb[0] == doctest::Approx(0.5));
  CHECK(out.rgb[1] == doctest::Approx(0.5));
  CHECK(out.rgb[2] == doctest::Approx(0.5));
}

TEST_CASE("field evaluation is deterministic and range-bounded") {
  FieldConfig cfg;
  cfg.hidden_layers = 3;
  cfg.width = 24;
  Rng rng(42);
  FieldParams p = FieldParams::init(cfg, rng);
  // exaggerate parameters; outputs must stay in range
  for (auto& [name, t] : p.named("f")) t->data *= 13.7;
  Rng prng(7);
  for (int i = 0; i < 50; ++i) {
    Vec3 x(prng.uniform(-3, 3), prng.uniform(-3, 3), prng.uniform(-3, 3));
    Vec3 d(prng.normal(), prng.normal(), prng.normal());
    d.normalize();
    FieldOutput a = eval_field(p, x, d);
    FieldOutput b = eval_field(p, x, d);
    CHECK(a.sigma == b.sigma);
    CHECK(a.rgb == b.rgb);
    CHECK(a.sigma >= 0);
    for (int c = 0; c < 3; ++c) {
      CHECK(a.rgb[c] >= 0);
      CHECK(a.rgb[c] <= 1);
    }
  }
}

TEST_CASE("sigma is invariant to view direction") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 16;
  Rng rng(5);
  FieldParams p = FieldParams::init(cfg, rng);
  Rng prng(8);
  for (int i = 0; i < 20; ++i) {
    Vec3 x(prng.uniform(-1, 1), prng.uniform(-1, 1), prng.uniform(-1, 1));
    Vec3 d1(prng.normal(), prng.normal(), prng.normal());
    Vec3 d2(prng.normal(), prng.normal(), prng.normal());
    d1.normalize();
    d2.normalize();
    CHECK(eval_field(p, x, d1).sigma == eval_field(p, x, d2).sigma);
  }
}

TEST_CASE("direction normalization contract") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 8;
  Rng rng(5);
  FieldParams p = FieldParams::init(cfg, rng);
  Vec3 x(0.1, 0.2, 0.3);
  // within 1e-3 of unit: accepted (re-normalized)
  FieldOutput a = eval_field(p, x, Vec3(0, 0, 1.0005));
  FieldOutput b = eval_field(p, x, Vec3(0, 0, 1));
  CHECK(a.sigma == b.sigma);
  CHECK((a.rgb - b.rgb).norm() < 1e-12);
  // far from unit: rejected
  CHECK_THROWS_AS(eval_field(p, x, Vec3(0, 0, 1.5)), DataError);
  // non-finite input: rejected
  CHECK_THROWS_AS(eval_field(p, Vec3(std::nan(""), 0, 0), Vec3(0, 0, 1)), NumericError);
}

TEST_CASE("graph path matches pure path bitwise") {
  FieldConfig cfg;
  cfg.hidden_layers = 3;
  cfg.width = 32;
  cfg.color_hidden = 16;
  Rng rng(17);
  FieldParams p = FieldParams::init(cfg, rng);
  const int s = 33;
  Points x(s, 3), d(s, 3);
  Rng prng(19);
  for (int r = 0; r < s; ++r) {
    x.row(r) << prng.uniform(-1, 1), prng.uniform(-1, 1), prng.uniform(-1, 1);
    Vec3 dd(prng.normal(), prng.normal(), prng.normal());
    d.row(r) = dd.normalized().transpose();
  }
  ArrX sigma;
  Points rgb;
  eval_field_batch(p, x, d, sigma, rgb);

  ad::Graph g;
  MatX ex = positional_encode(MatX(x), cfg.enc_x);
  MatX ed = positional_encode(MatX(d), cfg.enc_d);
  ad::Val vx = g.constant({s, ex.cols() > 0 ? int(ex.cols()) : 0},
                          ArrX(Eigen::Map<const ArrX>(ex.data(), ex.size())));
  ad::Val vd = g.constant({s, int(ed.cols())}, ArrX(Eigen::Map<const ArrX>(ed.data(), ed.size())));
  FieldVals fv = emit_field(g, p, vx, vd);
  for (int r = 0; r < s; ++r) {
    CHECK(fv.sigma.data()[r] == sigma[r]);
    for (int c = 0; c < 3; ++c) CHECK(fv.rgb.data()[r * 3 + c] == rgb(r, c));
  }
}

TEST_CASE("density gradient w.r.t. position passes finite differences") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 12;
  cfg.enc_x = {4, true};
  Rng rng(23);
  FieldParams p = FieldParams::init(cfg, rng);
  ad::Tensor x({1, 3});
  x.data[0] = 0.37;
  x.data[1] = -0.21;
  x.data[2] = 0.11;

  auto build = [&](ad::Graph& g) {
    ad::Val enc = emit_positional_encode(g.leaf(x), cfg.enc_x);
    return ad::sum(emit_field_density(g, p, enc));
  };
  auto forward = [&]() {
    ad::Graph g;
    return build(g).item();
  };
  auto backward = [&]() {
    x.zero_grad();
    ad::Graph g;
    g.backward(build(g));
  };
  std::vector<ad::Tensor*> params = {&x};
  Rng pick(1);
  CHECK(test::max_rel_err_fd(params, forward, backward, pick, 0) < 1e-4);
}

TEST_CASE("field parameter gradients pass finite differences") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 10;
  cfg.color_hidden = 6;
  cfg.enc_x = {3, true};
  cfg.enc_d = {2, true};
  Rng rng(29);
  FieldParams p = FieldParams::init(cfg, rng);
  const int s = 7;
  Points x(s, 3), d(s, 3);
  Rng prng(31);
  for (int r = 0; r < s; ++r) {
    x.row(r) << prng.uniform(-1, 1), prng.uniform(-1, 1), prng.uniform(-1, 1);
    Vec3 dd(prng.normal(), prng.normal(), prng.normal());
    d.row(r) = dd.normalized().transpose();
  }
  MatX ex = positional_encode(MatX(x), cfg.enc_x);
  MatX ed = positional_encode(MatX(d), cfg.enc_d);

  auto build = [&](ad::Graph& g) {
    ad::Val vx = g.constant({s, int(ex.cols())}, ArrX(Eigen::Map<const ArrX>(ex.data(), ex.size())));
    ad::Val vd = g.constant({s, int(ed.cols())}, ArrX(Eigen::Map<const ArrX>(ed.data(), ed.size())));
    FieldVals fv = emit_field(g, p, vx, vd);
    return ad::add(ad::mean(ad::square(fv.rgb)), ad::mean(ad::square(fv.sigma)));
  };
  std::vector<ad::Tensor*> params;
  for (auto& [name, t] : p.named("f")) params.push_back(t);
  auto forward = [&]() {
    ad::Graph g;
    return build(g).item();
  };
  auto backward = [&]() {
    for (auto* t : params) t->zero_grad();
    ad::Graph g;
    g.backward(build(g));
  };
  Rng pick(2);
  CHECK(test::max_rel_err_fd(params, forward, backward, pick, 4) < 1e-4);
}

TEST_CASE("checkpoint names round-trip field parameters") {
  FieldConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 8;
  Rng rng(37);
  FieldParams p = FieldParams::init(cfg, rng);
  std::map<std::string, ad::Tensor> ckpt;
  for (auto& [name, t] : p.named("scene")) ckpt[name] = *t;
  FieldParams q = FieldParams::init(cfg, rng);  // different values
  q.load(ckpt, "scene");
  for (size_t i = 0; i < p.w.size(); ++i)
    CHECK((p.w[i].data == q.w[i].data).all());
  CHECK_THROWS_AS(q.load(ckpt, "human"), DataError);
}
