#pragma once

#include "dfr/core/types.hpp"

namespace dfr::ad {

// Row-major GEMM kernels, row-partitioned across worker threads with a
// static split. For a fixed thread count the accumulation order per
// output element is fixed, so results are bit-reproducible.

// C = A(mxk) * B(kxn)
void matmul_nn(const Real* a, const Real* b, Real* c, long m, long k, long n);
// C += A(mxk) * B(nxk)^T
void matmul_nt_acc(const Real* a, const Real* b, Real* c, long m, long k, long n);
// C += A(kxm)^T * B(kxn)
void matmul_tn_acc(const Real* a, const Real* b, Real* c, long m, long k, long n);

}  // namespace dfr::ad
