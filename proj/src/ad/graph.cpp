#include "dfr/ad/graph.hpp"

#include <cmath>
#include <string>

#include "dfr/ad/kernels.hpp"
#include "dfr/core/error.hpp"

namespace dfr::ad {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw DataError("graph: " + msg);
}

// Normalized 2-D view of a rank <= 2 shape (rank 0 -> 1x1, rank 1 -> 1xN).
struct Dim2 {
  long r = 1, c = 1;
};

Dim2 dim2(const Shape& s) {
  require(s.size() <= 2, "rank > 2 not supported by elementwise ops, got " + shape_str(s));
  Dim2 d;
  if (s.size() == 1) d.c = s[0];
  if (s.size() == 2) {
    d.r = s[0];
    d.c = s[1];
  }
  return d;
}

// Broadcast semantics: dims aligned from the trailing end; each dim must
// match or be 1.
Shape broadcast_shape(const Shape& a, const Shape& b) {
  Dim2 da = dim2(a), db = dim2(b);
  require(da.r == db.r || da.r == 1 || db.r == 1, "broadcast rows " + shape_str(a) + " vs " + shape_str(b));
  require(da.c == db.c || da.c == 1 || db.c == 1, "broadcast cols " + shape_str(a) + " vs " + shape_str(b));
  long r = std::max(da.r, db.r), c = std::max(da.c, db.c);
  // Preserve the higher input rank.
  size_t rank = std::max(a.size(), b.size());
  if (rank == 0) return {};
  if (rank == 1) return {int(c)};
  return {int(r), int(c)};
}

// Strided element access of an input broadcast against an output (R,C).
struct BView {
  const Real* p;
  long sr, sc;
  Real at(long r, long c) const { return p[r * sr + c * sc]; }
};

BView bview(const Shape& s, const ArrX& data) {
  Dim2 d = dim2(s);
  return {data.data(), d.r == 1 ? 0 : d.c, d.c == 1 ? 0 : 1};
}

template <class F>
ArrX ew_binary(const Shape& sa, const ArrX& a, const Shape& sb, const ArrX& b, const Shape& out, F f) {
  if (same_shape(sa, sb)) {
    ArrX r(a.size());
    for (long i = 0; i < a.size(); ++i) r[i] = f(a[i], b[i]);
    return r;
  }
  Dim2 od = dim2(out);
  BView va = bview(sa, a), vb = bview(sb, b);
  ArrX r(od.r * od.c);
  for (long i = 0; i < od.r; ++i)
    for (long j = 0; j < od.c; ++j) r[i * od.c + j] = f(va.at(i, j), vb.at(i, j));
  return r;
}

// Reduce a cotangent with the output shape down to an input shape by
// summing over broadcast dimensions.
ArrX reduce_to(const Shape& out_s, const ArrX& g, const Shape& in_s) {
  if (same_shape(out_s, in_s)) return g;
  Dim2 od = dim2(out_s), id = dim2(in_s);
  ArrX r = ArrX::Zero(id.r * id.c);
  for (long i = 0; i < od.r; ++i) {
    long ii = id.r == 1 ? 0 : i;
    for (long j = 0; j < od.c; ++j) {
      long jj = id.c == 1 ? 0 : j;
      r[ii * id.c + jj] += g[i * od.c + j];
    }
  }
  return r;
}

Real sigmoid_fn(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

Real softplus_fn(Real x) {
  if (x > Real(30)) return x;
  if (x < Real(-30)) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

int Graph::emit(Node n) {
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

Val Graph::leaf(Tensor& t) {
  Node n;
  n.op = Op::kLeaf;
  n.shape = t.shape;
  n.leaf = &t;
  n.needs_grad = true;
  return {this, emit(std::move(n))};
}

Val Graph::constant(Shape shape, ArrX data) {
  require(long(data.size()) == numel(shape), "constant: data size mismatch");
  Node n;
  n.op = Op::kConst;
  n.shape = std::move(shape);
  n.val = std::move(data);
  return {this, emit(std::move(n))};
}

Val Graph::custom(Shape out_shape, ArrX value, std::span<const Val> inputs,
                  std::shared_ptr<CustomOp> op) {
  require(long(value.size()) == numel(out_shape), "custom: value size mismatch");
  Node n;
  n.op = Op::kCustom;
  n.shape = std::move(out_shape);
  n.val = std::move(value);
  n.custom = std::move(op);
  for (const Val& v : inputs) {
    require(v.g == this, "custom: input from another graph");
    n.in.push_back(v.id);
    n.needs_grad = n.needs_grad || nodes_[v.id].needs_grad;
  }
  return {this, emit(std::move(n))};
}

namespace {

Val emit_binary(Op op, Val a, Val b) {
  require(a.g == b.g, "operands from different graphs");
  Graph& g = *a.g;
  const Shape &sa = g.shape(a.id), &sb = g.shape(b.id);
  Node n;
  n.op = op;
  n.shape = broadcast_shape(sa, sb);
  n.in = {a.id, b.id};
  n.needs_grad = g.node(a.id).needs_grad || g.node(b.id).needs_grad;
  const ArrX &da = g.value(a.id), &db = g.value(b.id);
  switch (op) {
    case Op::kAdd:
      if (same_shape(sa, sb)) {
        n.val = da + db;
      } else {
        n.val = ew_binary(sa, da, sb, db, n.shape, [](Real x, Real y) { return x + y; });
      }
      break;
    case Op::kSub:
      if (same_shape(sa, sb)) {
        n.val = da - db;
      } else {
        n.val = ew_binary(sa, da, sb, db, n.shape, [](Real x, Real y) { return x - y; });
      }
      break;
    case Op::kMul:
      if (same_shape(sa, sb)) {
        n.val = da * db;
      } else {
        n.val = ew_binary(sa, da, sb, db, n.shape, [](Real x, Real y) { return x * y; });
      }
      break;
    case Op::kDiv:
      if (same_shape(sa, sb)) {
        n.val = da / db;
      } else {
        n.val = ew_binary(sa, da, sb, db, n.shape, [](Real x, Real y) { return x / y; });
      }
      break;
    default:
      require(false, "not a binary op");
  }
  return {&g, g.emit(std::move(n))};
}

template <class FwdF>
Val emit_unary(Op op, Val x, FwdF f) {
  Graph& g = *x.g;
  Node n;
  n.op = op;
  n.shape = g.shape(x.id);
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  n.val.resize(d.size());
  for (long i = 0; i < d.size(); ++i) n.val[i] = f(d[i]);
  return {&g, g.emit(std::move(n))};
}

}  // namespace

Val add(Val a, Val b) { return emit_binary(Op::kAdd, a, b); }
Val sub(Val a, Val b) { return emit_binary(Op::kSub, a, b); }
Val mul(Val a, Val b) { return emit_binary(Op::kMul, a, b); }
Val div(Val a, Val b) { return emit_binary(Op::kDiv, a, b); }

Val matmul(Val a, Val b) {
  require(a.g == b.g, "operands from different graphs");
  Graph& g = *a.g;
  const Shape &sa = g.shape(a.id), &sb = g.shape(b.id);
  require(sa.size() >= 1 && sa.size() <= 2 && sb.size() >= 1 && sb.size() <= 2,
          "matmul: rank must be 1 or 2");
  long m = sa.size() == 2 ? sa[0] : 1;
  long k = sa.size() == 2 ? sa[1] : sa[0];
  long k2 = sb.size() == 2 ? sb[0] : sb[0];
  long nn = sb.size() == 2 ? sb[1] : 1;
  require(k == k2, "matmul: inner dims " + shape_str(sa) + " x " + shape_str(sb));
  Node n;
  n.op = Op::kMatMul;
  n.i0 = int(sa.size());
  n.i1 = int(sb.size());
  if (sa.size() == 2 && sb.size() == 2)
    n.shape = {int(m), int(nn)};
  else if (sa.size() == 2)
    n.shape = {int(m)};
  else if (sb.size() == 2)
    n.shape = {int(nn)};
  else
    n.shape = {};
  n.in = {a.id, b.id};
  n.needs_grad = g.node(a.id).needs_grad || g.node(b.id).needs_grad;
  n.val.resize(m * nn);
  matmul_nn(g.value(a.id).data(), g.value(b.id).data(), n.val.data(), m, k, nn);
  return {&g, g.emit(std::move(n))};
}

Val relu(Val x) {
  return emit_unary(Op::kRelu, x, [](Real v) { return v > 0 ? v : Real(0); });
}
Val sigmoid(Val x) {
  return emit_unary(Op::kSigmoid, x, sigmoid_fn);
}
Val softplus(Val x) { return emit_unary(Op::kSoftplus, x, softplus_fn); }
Val sin(Val x) {
  return emit_unary(Op::kSin, x, [](Real v) { return std::sin(v); });
}
Val cos(Val x) {
  return emit_unary(Op::kCos, x, [](Real v) { return std::cos(v); });
}
Val exp(Val x) {
  return emit_unary(Op::kExp, x, [](Real v) { return std::exp(v); });
}
Val log(Val x) {
  return emit_unary(Op::kLog, x, [](Real v) { return std::log(v); });
}
Val abs(Val x) {
  return emit_unary(Op::kAbs, x, [](Real v) { return std::abs(v); });
}
Val sqrt(Val x) {
  return emit_unary(Op::kSqrt, x, [](Real v) { return std::sqrt(v); });
}
Val square(Val x) {
  return emit_unary(Op::kSquare, x, [](Real v) { return v * v; });
}

Val scalar_mul(Val x, Real s) {
  Graph& g = *x.g;
  Node n;
  n.op = Op::kScalarMul;
  n.shape = g.shape(x.id);
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  n.scalar = s;
  n.val = g.value(x.id) * s;
  return {&g, g.emit(std::move(n))};
}

namespace {

Val emit_reduce(Op op, Val x) {
  Graph& g = *x.g;
  Node n;
  n.op = op;
  n.shape = {};
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  Real v = 0;
  switch (op) {
    case Op::kSum: v = d.sum(); break;
    case Op::kMean: v = d.size() ? d.mean() : 0; break;
    case Op::kL1Norm: v = d.abs().sum(); break;
    case Op::kL2Norm: v = std::sqrt((d * d).sum()); break;
    default: require(false, "not a reduction");
  }
  n.val = ArrX::Constant(1, v);
  return {&g, g.emit(std::move(n))};
}

}  // namespace

Val sum(Val x) { return emit_reduce(Op::kSum, x); }
Val mean(Val x) { return emit_reduce(Op::kMean, x); }
Val l1_norm(Val x) { return emit_reduce(Op::kL1Norm, x); }
Val l2_norm(Val x) { return emit_reduce(Op::kL2Norm, x); }

Val row_sum(Val x) {
  Graph& g = *x.g;
  const Shape& s = g.shape(x.id);
  require(s.size() == 2, "row_sum: rank-2 input required");
  long r = s[0], c = s[1];
  Node n;
  n.op = Op::kRowSum;
  n.shape = {int(r)};
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  n.val.resize(r);
  for (long i = 0; i < r; ++i) n.val[i] = d.segment(i * c, c).sum();
  return {&g, g.emit(std::move(n))};
}

Val concat_cols(std::span<const Val> xs) {
  require(!xs.empty(), "concat: no inputs");
  Graph& g = *xs[0].g;
  long rows = dim2(g.shape(xs[0].id)).r;
  long total = 0;
  Node n;
  n.op = Op::kConcatCols;
  for (const Val& v : xs) {
    require(v.g == &g, "concat: inputs from different graphs");
    Dim2 d = dim2(g.shape(v.id));
    require(d.r == rows, "concat_cols: row mismatch");
    n.in.push_back(v.id);
    n.idx.push_back(int(d.c));  // per-input width
    total += d.c;
    n.needs_grad = n.needs_grad || g.node(v.id).needs_grad;
  }
  n.shape = g.shape(xs[0].id).size() <= 1 && rows == 1 ? Shape{int(total)}
                                                       : Shape{int(rows), int(total)};
  n.val.resize(rows * total);
  long off = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const ArrX& d = g.value(xs[i].id);
    long c = n.idx[i];
    for (long r = 0; r < rows; ++r) n.val.segment(r * total + off, c) = d.segment(r * c, c);
    off += c;
  }
  return {&g, g.emit(std::move(n))};
}

Val concat_rows(std::span<const Val> xs) {
  require(!xs.empty(), "concat: no inputs");
  Graph& g = *xs[0].g;
  Dim2 d0 = dim2(g.shape(xs[0].id));
  long cols = d0.c, total = 0;
  bool rank1 = g.shape(xs[0].id).size() <= 1;
  Node n;
  n.op = Op::kConcatRows;
  for (const Val& v : xs) {
    require(v.g == &g, "concat: inputs from different graphs");
    const Shape& s = g.shape(v.id);
    Dim2 d = dim2(s);
    if (rank1) {
      require(s.size() <= 1, "concat_rows: mixed ranks");
      n.idx.push_back(int(d.c));
      total += d.c;
    } else {
      require(d.c == cols, "concat_rows: col mismatch");
      n.idx.push_back(int(d.r));
      total += d.r;
    }
    n.in.push_back(v.id);
    n.needs_grad = n.needs_grad || g.node(v.id).needs_grad;
  }
  n.shape = rank1 ? Shape{int(total)} : Shape{int(total), int(cols)};
  n.val.resize(numel(n.shape));
  long off = 0;
  for (const Val& v : xs) {
    const ArrX& d = g.value(v.id);
    n.val.segment(off, d.size()) = d;
    off += d.size();
  }
  return {&g, g.emit(std::move(n))};
}

Val slice_rows(Val x, int start, int len) {
  Graph& g = *x.g;
  const Shape& s = g.shape(x.id);
  require(s.size() >= 1 && s.size() <= 2, "slice_rows: rank 1 or 2");
  long rows = s[0];
  long cols = s.size() == 2 ? s[1] : 1;
  require(start >= 0 && len >= 0 && start + len <= rows, "slice_rows: out of range");
  Node n;
  n.op = Op::kSliceRows;
  n.i0 = start;
  n.i1 = len;
  n.shape = s.size() == 2 ? Shape{len, int(cols)} : Shape{len};
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  n.val = g.value(x.id).segment(long(start) * cols, long(len) * cols);
  return {&g, g.emit(std::move(n))};
}

Val slice_cols(Val x, int start, int len) {
  Graph& g = *x.g;
  const Shape& s = g.shape(x.id);
  require(s.size() == 2, "slice_cols: rank-2 input required");
  long rows = s[0], cols = s[1];
  require(start >= 0 && len >= 0 && start + len <= cols, "slice_cols: out of range");
  Node n;
  n.op = Op::kSliceCols;
  n.i0 = start;
  n.i1 = len;
  n.shape = {int(rows), len};
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  n.val.resize(rows * len);
  for (long r = 0; r < rows; ++r) n.val.segment(r * len, len) = d.segment(r * cols + start, len);
  return {&g, g.emit(std::move(n))};
}

Val reshape(Val x, Shape s) {
  Graph& g = *x.g;
  require(numel(s) == numel(g.shape(x.id)), "reshape: numel mismatch");
  Node n;
  n.op = Op::kReshape;
  n.shape = std::move(s);
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  n.val = g.value(x.id);
  return {&g, g.emit(std::move(n))};
}

Val cumsum_exclusive(Val x) {
  Graph& g = *x.g;
  const Shape& s = g.shape(x.id);
  require(s.size() == 2, "cumsum_exclusive: rank-2 input required");
  long rows = s[0], cols = s[1];
  Node n;
  n.op = Op::kCumsumExcl;
  n.shape = s;
  n.in = {x.id};
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  n.val.resize(d.size());
  for (long r = 0; r < rows; ++r) {
    Real acc = 0;
    for (long c = 0; c < cols; ++c) {
      n.val[r * cols + c] = acc;
      acc += d[r * cols + c];
    }
  }
  return {&g, g.emit(std::move(n))};
}

Val gather_cols(Val x, const std::vector<int>& idx, int m) {
  Graph& g = *x.g;
  const Shape& s = g.shape(x.id);
  require(s.size() == 2, "gather_cols: rank-2 input required");
  long rows = s[0], cols = s[1];
  require(long(idx.size()) == rows * m, "gather_cols: index size mismatch");
  Node n;
  n.op = Op::kGatherCols;
  n.shape = {int(rows), m};
  n.in = {x.id};
  n.idx = idx;
  n.needs_grad = g.node(x.id).needs_grad;
  const ArrX& d = g.value(x.id);
  n.val.resize(rows * m);
  for (long r = 0; r < rows; ++r)
    for (long j = 0; j < m; ++j) {
      int c = idx[r * m + j];
      require(c >= 0 && c < cols, "gather_cols: index out of range");
      n.val[r * m + j] = d[r * cols + c];
    }
  return {&g, g.emit(std::move(n))};
}

// --- backward ----------------------------------------------------------

void Graph::backward(Val loss) {
  require(loss.g == this && loss.id >= 0 && loss.id < int(nodes_.size()),
          "backward: loss not in this graph");
  require(numel(nodes_[loss.id].shape) == 1 && nodes_[loss.id].shape.size() <= 1,
          "backward: loss must be scalar");
  // Node gradients are per-call temporaries; leaf tensors accumulate.
  for (Node& n : nodes_) n.grad.resize(0);
  accum_grad(loss.id, ArrX::Constant(1, 1));

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    const ArrX& go = n.grad;
    auto in_val = [&](int k) -> const ArrX& { return value(n.in[k]); };
    auto in_needs = [&](int k) { return nodes_[n.in[k]].needs_grad; };

    switch (n.op) {
      case Op::kLeaf:
        n.leaf->ensure_grad();
        n.leaf->grad += go;
        break;
      case Op::kConst:
        break;
      case Op::kAdd: {
        const Shape &sa = nodes_[n.in[0]].shape, &sb = nodes_[n.in[1]].shape;
        if (in_needs(0)) accum_grad(n.in[0], reduce_to(n.shape, go, sa));
        if (in_needs(1)) accum_grad(n.in[1], reduce_to(n.shape, go, sb));
        break;
      }
      case Op::kSub: {
        const Shape &sa = nodes_[n.in[0]].shape, &sb = nodes_[n.in[1]].shape;
        if (in_needs(0)) accum_grad(n.in[0], reduce_to(n.shape, go, sa));
        if (in_needs(1)) accum_grad(n.in[1], ArrX(-reduce_to(n.shape, go, sb)));
        break;
      }
      case Op::kMul: {
        const Shape &sa = nodes_[n.in[0]].shape, &sb = nodes_[n.in[1]].shape;
        if (in_needs(0)) {
          ArrX t = ew_binary(n.shape, go, sb, in_val(1), n.shape, [](Real g, Real b) { return g * b; });
          accum_grad(n.in[0], reduce_to(n.shape, t, sa));
        }
        if (in_needs(1)) {
          ArrX t = ew_binary(n.shape, go, sa, in_val(0), n.shape, [](Real g, Real a) { return g * a; });
          accum_grad(n.in[1], reduce_to(n.shape, t, sb));
        }
        break;
      }
      case Op::kDiv: {
        const Shape &sa = nodes_[n.in[0]].shape, &sb = nodes_[n.in[1]].shape;
        if (in_needs(0)) {
          ArrX t = ew_binary(n.shape, go, sb, in_val(1), n.shape, [](Real g, Real b) { return g / b; });
          accum_grad(n.in[0], reduce_to(n.shape, t, sa));
        }
        if (in_needs(1)) {
          // d(a/b)/db = -a / b^2; n.val caches a/b so use -go * val / b
          ArrX t = ew_binary(n.shape, ArrX(go * n.val), sb, in_val(1), n.shape,
                             [](Real gv, Real b) { return -gv / b; });
          accum_grad(n.in[1], reduce_to(n.shape, t, sb));
        }
        break;
      }
      case Op::kMatMul: {
        const Shape &sa = nodes_[n.in[0]].shape, &sb = nodes_[n.in[1]].shape;
        long m = sa.size() == 2 ? sa[0] : 1;
        long k = sa.size() == 2 ? sa[1] : sa[0];
        long nn = sb.size() == 2 ? sb[1] : 1;
        if (in_needs(0)) {
          Node& na = nodes_[n.in[0]];
          if (na.grad.size() == 0) na.grad = ArrX::Zero(m * k);
          matmul_nt_acc(go.data(), value(n.in[1]).data(), na.grad.data(), m, nn, k);
        }
        if (in_needs(1)) {
          Node& nb = nodes_[n.in[1]];
          if (nb.grad.size() == 0) nb.grad = ArrX::Zero(k * nn);
          matmul_tn_acc(value(n.in[0]).data(), go.data(), nb.grad.data(), k, m, nn);
        }
        break;
      }
      case Op::kRelu: {
        const ArrX& x = in_val(0);
        accum_grad(n.in[0], ArrX((x > 0).select(go, ArrX::Zero(go.size()))));
        break;
      }
      case Op::kSigmoid:
        accum_grad(n.in[0], ArrX(go * n.val * (1 - n.val)));
        break;
      case Op::kSoftplus: {
        const ArrX& x = in_val(0);
        ArrX d(x.size());
        for (long i = 0; i < x.size(); ++i) d[i] = sigmoid_fn(x[i]);
        accum_grad(n.in[0], ArrX(go * d));
        break;
      }
      case Op::kSin:
        accum_grad(n.in[0], ArrX(go * in_val(0).cos()));
        break;
      case Op::kCos:
        accum_grad(n.in[0], ArrX(-go * in_val(0).sin()));
        break;
      case Op::kExp:
        accum_grad(n.in[0], ArrX(go * n.val));
        break;
      case Op::kLog:
        accum_grad(n.in[0], ArrX(go / in_val(0)));
        break;
      case Op::kAbs: {
        const ArrX& x = in_val(0);
        accum_grad(n.in[0], ArrX(go * x.sign()));
        break;
      }
      case Op::kSqrt: {
        // subgradient 0 at x == 0
        ArrX d(n.val.size());
        for (long i = 0; i < n.val.size(); ++i) d[i] = n.val[i] > 0 ? go[i] / (2 * n.val[i]) : 0;
        accum_grad(n.in[0], d);
        break;
      }
      case Op::kSquare:
        accum_grad(n.in[0], ArrX(2 * go * in_val(0)));
        break;
      case Op::kScalarMul:
        accum_grad(n.in[0], ArrX(go * n.scalar));
        break;
      case Op::kSum:
        accum_grad(n.in[0], ArrX(ArrX::Constant(in_val(0).size(), go[0])));
        break;
      case Op::kMean:
        accum_grad(n.in[0], ArrX(ArrX::Constant(in_val(0).size(), go[0] / Real(in_val(0).size()))));
        break;
      case Op::kL1Norm:
        accum_grad(n.in[0], ArrX(go[0] * in_val(0).sign()));
        break;
      case Op::kL2Norm: {
        Real norm = n.val[0];
        if (norm > Real(0)) accum_grad(n.in[0], ArrX(go[0] / norm * in_val(0)));
        break;
      }
      case Op::kRowSum: {
        const Shape& s = nodes_[n.in[0]].shape;
        long rows = s[0], cols = s[1];
        ArrX gi(rows * cols);
        for (long r = 0; r < rows; ++r) gi.segment(r * cols, cols).setConstant(go[r]);
        accum_grad(n.in[0], gi);
        break;
      }
      case Op::kConcatCols: {
        long rows = dim2(n.shape).r, total = dim2(n.shape).c;
        long off = 0;
        for (size_t k = 0; k < n.in.size(); ++k) {
          long c = n.idx[k];
          if (in_needs(int(k))) {
            ArrX gi(rows * c);
            for (long r = 0; r < rows; ++r) gi.segment(r * c, c) = go.segment(r * total + off, c);
            accum_grad(n.in[k], gi);
          }
          off += c;
        }
        break;
      }
      case Op::kConcatRows: {
        long off = 0;
        for (size_t k = 0; k < n.in.size(); ++k) {
          long sz = value(n.in[k]).size();
          if (in_needs(int(k))) accum_grad(n.in[k], ArrX(go.segment(off, sz)));
          off += sz;
        }
        break;
      }
      case Op::kSliceRows: {
        const Shape& s = nodes_[n.in[0]].shape;
        long cols = s.size() == 2 ? s[1] : 1;
        ArrX gi = ArrX::Zero(numel(s));
        gi.segment(long(n.i0) * cols, long(n.i1) * cols) = go;
        accum_grad(n.in[0], gi);
        break;
      }
      case Op::kSliceCols: {
        const Shape& s = nodes_[n.in[0]].shape;
        long rows = s[0], cols = s[1];
        ArrX gi = ArrX::Zero(rows * cols);
        for (long r = 0; r < rows; ++r) gi.segment(r * cols + n.i0, n.i1) = go.segment(r * n.i1, n.i1);
        accum_grad(n.in[0], gi);
        break;
      }
      case Op::kReshape:
        accum_grad(n.in[0], go);
        break;
      case Op::kCumsumExcl: {
        long rows = n.shape[0], cols = n.shape[1];
        ArrX gi(rows * cols);
        for (long r = 0; r < rows; ++r) {
          Real acc = 0;
          for (long c = cols - 1; c >= 0; --c) {
            gi[r * cols + c] = acc;
            acc += go[r * cols + c];
          }
        }
        accum_grad(n.in[0], gi);
        break;
      }
      case Op::kGatherCols: {
        const Shape& s = nodes_[n.in[0]].shape;
        long rows = s[0], cols = s[1];
        long m = n.shape[1];
        ArrX gi = ArrX::Zero(rows * cols);
        for (long r = 0; r < rows; ++r)
          for (long j = 0; j < m; ++j) gi[r * cols + n.idx[r * m + j]] += go[r * m + j];
        accum_grad(n.in[0], gi);
        break;
      }
      case Op::kCustom:
        n.custom->backward(go, *this, n);
        break;
    }
  }
}

}  // namespace dfr::ad
