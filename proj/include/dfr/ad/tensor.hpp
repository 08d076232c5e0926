#pragma once

#include <string>

#include "dfr/core/error.hpp"
#include "dfr/core/rng.hpp"
#include "dfr/core/types.hpp"

namespace dfr::ad {

// Dense value with an optional same-shape gradient buffer. Rank 0
// (empty shape) is a scalar. Data is flat, row-major.
struct Tensor {
  Shape shape;
  ArrX data;
  ArrX grad;  // empty until first accumulation

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)) { data = ArrX::Zero(numel(shape)); }
  Tensor(Shape s, ArrX d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape)) throw DataError("tensor: data size does not match shape");
  }

  static Tensor scalar(Real v) {
    Tensor t;
    t.data = ArrX::Constant(1, v);
    return t;
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

  static Tensor full(Shape s, Real v) {
    Tensor t;
    t.shape = std::move(s);
    t.data = ArrX::Constant(numel(t.shape), v);
    return t;
  }

  // i.i.d. normal with the given standard deviation
  static Tensor randn(Shape s, Rng& rng, Real stddev = 1) {
    Tensor t(std::move(s));
    for (long i = 0; i < t.data.size(); ++i) t.data[i] = stddev * rng.normal();
    return t;
  }

  long size() const { return data.size(); }
  int rank() const { return int(shape.size()); }
  bool is_scalar() const { return data.size() == 1 && shape.size() <= 1; }

  int rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? shape[0] : 1); }
  int cols() const { return rank() == 2 ? shape[1] : 1; }

  bool finite() const { return data.allFinite(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad = ArrX::Zero(data.size());
  }
  void zero_grad() {
    if (grad.size()) grad.setZero();
  }
};

}  // namespace dfr::ad
