#include "dfr/ad/kernels.hpp"

#include <Eigen/Core>

#include "dfr/core/parallel.hpp"

namespace dfr::ad {

namespace {
using CMap = Eigen::Map<const MatX>;
using MMap = Eigen::Map<MatX>;
constexpr long kSmallJob = 1 << 16;  // flops below this stay single-threaded
}  // namespace

void matmul_nn(const Real* a, const Real* b, Real* c, long m, long k, long n) {
  CMap A(a, m, k), B(b, k, n);
  MMap C(c, m, n);
  if (m * k * n < kSmallJob) {
    C.noalias() = A * B;
    return;
  }
  parallel_chunks(m, [&](long r0, long r1) {
    C.middleRows(r0, r1 - r0).noalias() = A.middleRows(r0, r1 - r0) * B;
  });
}

void matmul_nt_acc(const Real* a, const Real* b, Real* c, long m, long k, long n) {
  CMap A(a, m, k), B(b, n, k);
  MMap C(c, m, n);
  if (m * k * n < kSmallJob) {
    C.noalias() += A * B.transpose();
    return;
  }
  parallel_chunks(m, [&](long r0, long r1) {
    C.middleRows(r0, r1 - r0).noalias() += A.middleRows(r0, r1 - r0) * B.transpose();
  });
}

void matmul_tn_acc(const Real* a, const Real* b, Real* c, long m, long k, long n) {
  CMap A(a, k, m), B(b, k, n);
  MMap C(c, m, n);
  if (m * k * n < kSmallJob) {
    C.noalias() += A.transpose() * B;
    return;
  }
  // Split the output rows (columns of A).
  parallel_chunks(m, [&](long r0, long r1) {
    C.middleRows(r0, r1 - r0).noalias() += A.middleCols(r0, r1 - r0).transpose() * B;
  });
}

}  // namespace dfr::ad
