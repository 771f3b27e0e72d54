#pragma once

#include <cstddef>

namespace lf::kernels {

// Hot numeric kernels shared by the tensor engine. The OpenMP versions here
// are the production path; lf::kernels::serial keeps plain reference loops
// for parity tests and the benchmark target.
//
// Every kernel writes each output element from exactly one thread and
// accumulates it in a fixed order, so results are bit-identical for any
// thread count.

// C(M,N) = A(M,K) * B(K,N). Row-parallel, axpy inner loop.
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n);

// C(M,N) = A(K,M)^T * B(K,N). Serial rank-1 updates; meant for tall-skinny
// operands where C fits in cache (weight gradients).
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n);

// B(N,M) = A(M,N)^T.
void transpose(const double* a, double* b, int m, int n);

// out(j) = sum_i A(i,j) for A(M,N).
void colsum(const double* a, double* out, int m, int n);

// 3x3 same-convolution pieces, zero padding, stride 1.
// im2col: x(C,H,W) -> cols(H*W, C*9), column index ci*9 + dy*3 + dx.
void im2col3x3(const double* x, double* cols, int c, int h, int w);
// col2im: scatter-add transpose of im2col.
void col2im3x3(const double* cols, double* x, int c, int h, int w);

// Direct 3x3 same-convolution: y(Co,H,W), k(Co,Ci,3,3), bias(Co).
void conv3x3_direct(const double* x, const double* kern, const double* bias,
                    double* y, int ci, int co, int h, int w);

namespace serial {
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n);
void conv3x3_direct(const double* x, const double* kern, const double* bias,
                    double* y, int ci, int co, int h, int w);
}  // namespace serial

}  // namespace lf::kernels
