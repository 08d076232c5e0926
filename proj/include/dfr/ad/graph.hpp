#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dfr/ad/tensor.hpp"

namespace dfr::ad {

class Graph;
struct Node;

// Handle to a node in a graph. Cheap to copy.
struct Val {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return g != nullptr && id >= 0; }
  const ArrX& data() const;
  const Shape& shape() const;
  Real item() const;
};

enum class Op : uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatMul,
  kRelu,
  kSigmoid,
  kSoftplus,
  kSin,
  kCos,
  kExp,
  kLog,
  kAbs,
  kSqrt,
  kSquare,
  kScalarMul,
  kSum,
  kMean,
  kL1Norm,
  kL2Norm,
  kRowSum,
  kConcatCols,
  kConcatRows,
  kSliceRows,
  kSliceCols,
  kReshape,
  kCumsumExcl,
  kGatherCols,
  kCustom,
};

// Bespoke differentiable operation (used by the mesh warp). Forward values
// are computed by the caller; backward must accumulate into the inputs'
// node gradients through Graph::accum_grad.
struct CustomOp {
  virtual ~CustomOp() = default;
  virtual void backward(const ArrX& grad_out, Graph& g, const Node& self) = 0;
};

struct Node {
  Op op = Op::kConst;
  Shape shape;
  ArrX val;               // owns the forward value (unused for leaves)
  Tensor* leaf = nullptr; // kLeaf only; grads accumulate into leaf->grad
  bool needs_grad = false;
  ArrX grad;              // empty until gradient first reaches this node
  std::vector<int> in;
  Real scalar = 0;              // kScalarMul
  int i0 = 0, i1 = 0;           // slice start/len, matmul input ranks
  std::vector<int> idx;         // gather indices / concat offsets
  std::shared_ptr<CustomOp> custom;
};

// Append-only tape. Insertion order is topological order; backward walks
// nodes in strict reverse insertion order exactly once. Single-writer:
// one thread builds and differentiates a given graph.
class Graph {
 public:
  Val leaf(Tensor& t);
  Val constant(Shape shape, ArrX data);
  Val constant(const Tensor& t) { return constant(t.shape, t.data); }
  Val scalar(Real v) { return constant({}, ArrX::Constant(1, v)); }
  Val custom(Shape out_shape, ArrX value, std::span<const Val> inputs,
             std::shared_ptr<CustomOp> op);

  // Gradients of `loss` (scalar) w.r.t. every reachable leaf, accumulated
  // into the leaf tensors' grad buffers. Call Tensor::zero_grad first for
  // plain gradients; repeated calls accumulate.
  void backward(Val loss);

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

  const Node& node(int id) const { return nodes_[id]; }
  const ArrX& value(int id) const {
    const Node& n = nodes_[id];
    return n.op == Op::kLeaf ? n.leaf->data : n.val;
  }
  const Shape& shape(int id) const { return nodes_[id].shape; }

  // Accumulate a cotangent into a node's gradient buffer.
  template <class E>
  void accum_grad(int id, const E& g) {
    ArrX& dst = nodes_[id].grad;
    if (dst.size() == 0)
      dst = g;
    else
      dst += g;
  }

  int emit(Node n);

 private:
  std::vector<Node> nodes_;
  friend struct Val;
};

// --- op builders ------------------------------------------------------

Val add(Val a, Val b);
Val sub(Val a, Val b);
Val mul(Val a, Val b);
Val div(Val a, Val b);
Val matmul(Val a, Val b);
Val relu(Val x);
Val sigmoid(Val x);
Val softplus(Val x);
Val sin(Val x);
Val cos(Val x);
Val exp(Val x);
Val log(Val x);
Val abs(Val x);
Val sqrt(Val x);
Val square(Val x);
Val scalar_mul(Val x, Real s);
Val sum(Val x);
Val mean(Val x);
Val l1_norm(Val x);
Val l2_norm(Val x);
Val row_sum(Val x);                       // [R,C] -> [R]
Val concat_cols(std::span<const Val> xs); // [R,Ci] -> [R, sum Ci]
Val concat_rows(std::span<const Val> xs);
Val slice_rows(Val x, int start, int len);
Val slice_cols(Val x, int start, int len);
Val reshape(Val x, Shape s);
Val cumsum_exclusive(Val x);              // per row of [R,C]
// out[r,m] = x[r, idx[r*M+m]]
Val gather_cols(Val x, const std::vector<int>& idx, int m);

inline Val operator+(Val a, Val b) { return add(a, b); }
inline Val operator-(Val a, Val b) { return sub(a, b); }
inline Val operator*(Val a, Val b) { return mul(a, b); }
inline Val operator/(Val a, Val b) { return div(a, b); }
inline Val operator*(Val x, Real s) { return scalar_mul(x, s); }
inline Val operator*(Real s, Val x) { return scalar_mul(x, s); }
inline Val operator-(Val x) { return scalar_mul(x, -1); }

inline const ArrX& Val::data() const { return g->value(id); }
inline const Shape& Val::shape() const { return g->shape(id); }
inline Real Val::item() const { return data()[0]; }

}  // namespace dfr::ad
