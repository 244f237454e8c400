#pragma once

// Data-parallel compute kernels. srmoe::kern holds the OpenMP-parallel
// production versions; srmoe::kern::ref holds the serial reference kept for
// testing and benchmarking. Each parallel kernel uses the same loop nest and
// reduction order as its reference twin, and every output element is written
// by exactly one thread, so results are bitwise identical for any thread
// count. That property is what makes seeded runs reproducible.
//
// Conventions: all buffers are dense row-major doubles; image tensors are
// flattened [B][C][H][W]; conv weights are [OC][IC][KH][KW]; pooling uses
// non-overlapping windows (stride == size). Output buffers are assigned, not
// accumulated, unless stated otherwise.

#include <cstdint>

namespace srmoe::kern {

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// c[k x n] = a^T * b  with a[m x k], b[m x n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x k] = a * b^T  with a[m x n], b[k x n]
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

// Valid (no padding) convolution, stride s. y is [B][OC][OH][OW] with
// OH = (H-K)/s + 1, OW = (W-K)/s + 1.
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int B, int C, int H, int W, int OC, int K, int S);
// gx is assigned; pass nullptr to skip the input gradient.
void conv2d_bwd_input(const double* w, const double* gy, double* gx,
                      int B, int C, int H, int W, int OC, int K, int S);
// gw and gbias are assigned.
void conv2d_bwd_weights(const double* x, const double* gy, double* gw, double* gbias,
                        int B, int C, int H, int W, int OC, int K, int S);

// Max pooling with window P, stride P (floor division of the spatial dims).
// argmax receives, per output cell, the flat index into x of the winning
// input element; ties resolve to the first element in scan order.
void maxpool2d_fwd(const double* x, double* y, std::int64_t* argmax,
                   int B, int C, int H, int W, int P);
void maxpool2d_bwd(const double* gy, const std::int64_t* argmax, double* gx,
                   std::int64_t x_len, std::int64_t y_len);

// Adaptive average pooling to a T x T grid. Bin [i] covers input rows
// [floor(i*H/T), ceil((i+1)*H/T)); bins may overlap when T > H.
void adaptive_avgpool_fwd(const double* x, double* y,
                          int B, int C, int H, int W, int T);
void adaptive_avgpool_bwd(const double* gy, double* gx,
                          int B, int C, int H, int W, int T);

namespace ref {

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int B, int C, int H, int W, int OC, int K, int S);
void conv2d_bwd_input(const double* w, const double* gy, double* gx,
                      int B, int C, int H, int W, int OC, int K, int S);
void conv2d_bwd_weights(const double* x, const double* gy, double* gw, double* gbias,
                        int B, int C, int H, int W, int OC, int K, int S);
void maxpool2d_fwd(const double* x, double* y, std::int64_t* argmax,
                   int B, int C, int H, int W, int P);
void maxpool2d_bwd(const double* gy, const std::int64_t* argmax, double* gx,
                   std::int64_t x_len, std::int64_t y_len);
void adaptive_avgpool_fwd(const double* x, double* y,
                          int B, int C, int H, int W, int T);
void adaptive_avgpool_bwd(const double* gy, double* gx,
                          int B, int C, int H, int W, int T);

}  // namespace ref

inline int conv_out(int in, int k, int s) { return (in - k) / s + 1; }
inline int pool_out(int in, int p) { return in / p; }

}  // namespace srmoe::kern
