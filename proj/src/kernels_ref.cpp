// Serial reference kernels. Plain loop nests, no pragmas. The parallel
// versions in kernels_omp.cpp must stay bitwise-equal to these.

#include "srmoe/kernels.hpp"

#include <cstring>

namespace srmoe::kern::ref {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        for (int s = 0; s < k; ++s) {
            double ais = a[static_cast<std::size_t>(i) * k + s];
            const double* bs = b + static_cast<std::size_t>(s) * n;
            for (int j = 0; j < n; ++j) ci[j] += ais * bs[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    // c[k x n] = a^T b, a is [m x k], b is [m x n]
    for (int i = 0; i < k; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        for (int s = 0; s < m; ++s) {
            double asi = a[static_cast<std::size_t>(s) * k + i];
            const double* bs = b + static_cast<std::size_t>(s) * n;
            for (int j = 0; j < n; ++j) ci[j] += asi * bs[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
    // c[m x k] = a b^T, a is [m x n], b is [k x n]
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * n;
        double* ci = c + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* bj = b + static_cast<std::size_t>(j) * n;
            double acc = 0.0;
            for (int s = 0; s < n; ++s) acc += ai[s] * bj[s];
            ci[j] = acc;
        }
    }
}

void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int B, int C, int H, int W, int OC, int K, int S) {
    const int OH = conv_out(H, K, S), OW = conv_out(W, K, S);
    for (int b = 0; b < B; ++b) {
        for (int oc = 0; oc < OC; ++oc) {
            double* yp = y + ((static_cast<std::size_t>(b) * OC + oc) * OH) * OW;
            const double* wp = w + static_cast<std::size_t>(oc) * C * K * K;
            for (int oh = 0; oh < OH; ++oh) {
                for (int ow = 0; ow < OW; ++ow) {
                    double acc = bias ? bias[oc] : 0.0;
                    for (int c = 0; c < C; ++c) {
                        const double* xp = x + ((static_cast<std::size_t>(b) * C + c) * H) * W;
                        const double* wc = wp + static_cast<std::size_t>(c) * K * K;
                        for (int kh = 0; kh < K; ++kh)
                            for (int kw = 0; kw < K; ++kw)
                                acc += xp[(oh * S + kh) * W + (ow * S + kw)] * wc[kh * K + kw];
                    }
                    yp[oh * OW + ow] = acc;
                }
            }
        }
    }
}

void conv2d_bwd_input(const double* w, const double* gy, double* gx,
                      int B, int C, int H, int W, int OC, int K, int S) {
    const int OH = conv_out(H, K, S), OW = conv_out(W, K, S);
    std::memset(gx, 0, sizeof(double) * static_cast<std::size_t>(B) * C * H * W);
    for (int b = 0; b < B; ++b) {
        for (int oc = 0; oc < OC; ++oc) {
            const double* gyp = gy + ((static_cast<std::size_t>(b) * OC + oc) * OH) * OW;
            const double* wp = w + static_cast<std::size_t>(oc) * C * K * K;
            for (int oh = 0; oh < OH; ++oh) {
                for (int ow = 0; ow < OW; ++ow) {
                    double g = gyp[oh * OW + ow];
                    for (int c = 0; c < C; ++c) {
                        double* gxp = gx + ((static_cast<std::size_t>(b) * C + c) * H) * W;
                        const double* wc = wp + static_cast<std::size_t>(c) * K * K;
                        for (int kh = 0; kh < K; ++kh)
                            for (int kw = 0; kw < K; ++kw)
                                gxp[(oh * S + kh) * W + (ow * S + kw)] += g * wc[kh * K + kw];
                    }
                }
            }
        }
    }
}

void conv2d_bwd_weights(const double* x, const double* gy, double* gw, double* gbias,
                        int B, int C, int H, int W, int OC, int K, int S) {
    const int OH = conv_out(H, K, S), OW = conv_out(W, K, S);
    for (int oc = 0; oc < OC; ++oc) {
        double* gwp = gw + static_cast<std::size_t>(oc) * C * K * K;
        for (int i = 0; i < C * K * K; ++i) gwp[i] = 0.0;
        double gb = 0.0;
        for (int b = 0; b < B; ++b) {
            const double* gyp = gy + ((static_cast<std::size_t>(b) * OC + oc) * OH) * OW;
            for (int oh = 0; oh < OH; ++oh) {
                for (int ow = 0; ow < OW; ++ow) {
                    double g = gyp[oh * OW + ow];
                    gb += g;
                    for (int c = 0; c < C; ++c) {
                        const double* xp = x + ((static_cast<std::size_t>(b) * C + c) * H) * W;
                        double* gwc = gwp + static_cast<std::size_t>(c) * K * K;
                        for (int kh = 0; kh < K; ++kh)
                            for (int kw = 0; kw < K; ++kw)
                                gwc[kh * K + kw] += g * xp[(oh * S + kh) * W + (ow * S + kw)];
                    }
                }
            }
        }
        if (gbias) gbias[oc] = gb;
    }
}

void maxpool2d_fwd(const double* x, double* y, std::int64_t* argmax,
                   int B, int C, int H, int W, int P) {
    const int OH = pool_out(H, P), OW = pool_out(W, P);
    for (int plane = 0; plane < B * C; ++plane) {
        const double* xp = x + static_cast<std::size_t>(plane) * H * W;
        double* yp = y + static_cast<std::size_t>(plane) * OH * OW;
        std::int64_t* ap = argmax + static_cast<std::size_t>(plane) * OH * OW;
        std::int64_t base = static_cast<std::int64_t>(plane) * H * W;
        for (int oh = 0; oh < OH; ++oh) {
            for (int ow = 0; ow < OW; ++ow) {
                int h0 = oh * P, w0 = ow * P;
                double best = xp[h0 * W + w0];
                int best_idx = h0 * W + w0;
                for (int dh = 0; dh < P; ++dh)
                    for (int dw = 0; dw < P; ++dw) {
                        int idx = (h0 + dh) * W + (w0 + dw);
                        if (xp[idx] > best) {
                            best = xp[idx];
                            best_idx = idx;
                        }
                    }
                yp[oh * OW + ow] = best;
                ap[oh * OW + ow] = base + best_idx;
            }
        }
    }
}

void maxpool2d_bwd(const double* gy, const std::int64_t* argmax, double* gx,
                   std::int64_t x_len, std::int64_t y_len) {
    std::memset(gx, 0, sizeof(double) * static_cast<std::size_t>(x_len));
    for (std::int64_t i = 0; i < y_len; ++i) gx[argmax[i]] += gy[i];
}

void adaptive_avgpool_fwd(const double* x, double* y,
                          int B, int C, int H, int W, int T) {
    for (int plane = 0; plane < B * C; ++plane) {
        const double* xp = x + static_cast<std::size_t>(plane) * H * W;
        double* yp = y + static_cast<std::size_t>(plane) * T * T;
        for (int i = 0; i < T; ++i) {
            int h0 = (i * H) / T;
            int h1 = ((i + 1) * H + T - 1) / T;
            for (int j = 0; j < T; ++j) {
                int w0 = (j * W) / T;
                int w1 = ((j + 1) * W + T - 1) / T;
                double acc = 0.0;
                for (int h = h0; h < h1; ++h)
                    for (int w2 = w0; w2 < w1; ++w2) acc += xp[h * W + w2];
                yp[i * T + j] = acc / ((h1 - h0) * (w1 - w0));
            }
        }
    }
}

void adaptive_avgpool_bwd(const double* gy, double* gx,
                          int B, int C, int H, int W, int T) {
    std::memset(gx, 0, sizeof(double) * static_cast<std::size_t>(B) * C * H * W);
    for (int plane = 0; plane < B * C; ++plane) {
        const double* gyp = gy + static_cast<std::size_t>(plane) * T * T;
        double* gxp = gx + static_cast<std::size_t>(plane) * H * W;
        for (int i = 0; i < T; ++i) {
            int h0 = (i * H) / T;
            int h1 = ((i + 1) * H + T - 1) / T;
            for (int j = 0; j < T; ++j) {
                int w0 = (j * W) / T;
                int w1 = ((j + 1) * W + T - 1) / T;
                double g = gyp[i * T + j] / ((h1 - h0) * (w1 - w0));
                for (int h = h0; h < h1; ++h)
                    for (int w2 = w0; w2 < w1; ++w2) gxp[h * W + w2] += g;
            }
        }
    }
}

}  // namespace srmoe::kern::ref
