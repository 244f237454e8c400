#include "srmoe/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "srmoe/kernels.hpp"

namespace srmoe::ops {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

NodeId add(Tape& t, NodeId a, NodeId b) {
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    require(av.same_shape(bv), "add: shape mismatch");
    Mat y = av;
    y.add_scaled(bv, 1.0);
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, a, b, out]() {
        tp->grad(a).add_scaled(tp->grad(out), 1.0);
        tp->grad(b).add_scaled(tp->grad(out), 1.0);
    });
}

NodeId scale(Tape& t, NodeId a, double c) {
    Mat y = t.value(a);
    for (double& x : y.data) x *= c;
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, a, c, out]() {
        tp->grad(a).add_scaled(tp->grad(out), c);
    });
}

NodeId relu(Tape& t, NodeId x) {
    Mat y = t.value(x);
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, out]() {
        const Mat& xv = tp->value(x);
        const Mat& g = tp->grad(out);
        Mat& gx = tp->grad(x);
        for (std::size_t i = 0; i < xv.data.size(); ++i) {
            if (xv.data[i] > 0.0) gx.data[i] += g.data[i];
        }
    });
}

NodeId matmul(Tape& t, NodeId a, NodeId b) {
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    require(av.cols == bv.rows, "matmul: inner dimensions disagree");
    const int m = av.rows, k = av.cols, n = bv.cols;
    Mat y(m, n);
    kern::matmul(av.data.data(), bv.data.data(), y.data.data(), m, k, n);
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, a, b, out, m, k, n]() {
        const Mat& g = tp->grad(out);
        const Mat& avv = tp->value(a);
        const Mat& bvv = tp->value(b);
        Mat ga(m, k);
        kern::matmul_nt(g.data.data(), bvv.data.data(), ga.data.data(), m, k, n);
        tp->grad(a).add_scaled(ga, 1.0);
        Mat gb(k, n);
        kern::matmul_tn(avv.data.data(), g.data.data(), gb.data.data(), m, k, n);
        tp->grad(b).add_scaled(gb, 1.0);
    });
}

NodeId linear(Tape& t, NodeId x, NodeId w, NodeId b) {
    const Mat& xv = t.value(x);
    const Mat& wv = t.value(w);
    const Mat& bv = t.value(b);
    require(xv.cols == wv.rows, "linear: input width does not match weight rows");
    require(bv.rows == 1 && bv.cols == wv.cols, "linear: bias must be [1 x out]");
    const int B = xv.rows, in = xv.cols, out_f = wv.cols;
    Mat y(B, out_f);
    kern::matmul(xv.data.data(), wv.data.data(), y.data.data(), B, in, out_f);
    for (int r = 0; r < B; ++r) {
        double* yr = y.row(r);
        for (int c = 0; c < out_f; ++c) yr[c] += bv.data[static_cast<std::size_t>(c)];
    }
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, w, b, out, B, in, out_f]() {
        const Mat& g = tp->grad(out);
        const Mat& xvv = tp->value(x);
        const Mat& wvv = tp->value(w);
        Mat gx(B, in);
        kern::matmul_nt(g.data.data(), wvv.data.data(), gx.data.data(), B, in, out_f);
        tp->grad(x).add_scaled(gx, 1.0);
        Mat gw(in, out_f);
        kern::matmul_tn(xvv.data.data(), g.data.data(), gw.data.data(), B, in, out_f);
        tp->grad(w).add_scaled(gw, 1.0);
        Mat& gb = tp->grad(b);
        for (int r = 0; r < B; ++r) {
            const double* gr = g.row(r);
            for (int c = 0; c < out_f; ++c) gb.data[static_cast<std::size_t>(c)] += gr[c];
        }
    });
}

NodeId layer_norm(Tape& t, NodeId x, NodeId gamma, NodeId beta, double eps) {
    const Mat& xv = t.value(x);
    const Mat& gv = t.value(gamma);
    const Mat& bv = t.value(beta);
    require(gv.rows == 1 && gv.cols == xv.cols, "layer_norm: gamma must be [1 x n]");
    require(bv.rows == 1 && bv.cols == xv.cols, "layer_norm: beta must be [1 x n]");
    require(eps > 0.0, "layer_norm: eps must be positive");
    const int B = xv.rows, n = xv.cols;

    Mat y(B, n);
    Mat xhat(B, n);
    std::vector<double> inv_std(static_cast<std::size_t>(B), 0.0);
    for (int r = 0; r < B; ++r) {
        const double* xr = xv.row(r);
        double mu = 0.0;
        for (int c = 0; c < n; ++c) mu += xr[c];
        mu /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) {
            const double d = xr[c] - mu;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(r)] = inv;
        double* hr = xhat.row(r);
        double* yr = y.row(r);
        for (int c = 0; c < n; ++c) {
            hr[c] = (xr[c] - mu) * inv;
            yr[c] = gv.data[static_cast<std::size_t>(c)] * hr[c] + bv.data[static_cast<std::size_t>(c)];
        }
    }

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y),
                  [tp, x, gamma, beta, out, B, n, xh = std::move(xhat), inv = std::move(inv_std)]() {
        const Mat& g = tp->grad(out);
        const Mat& gv2 = tp->value(gamma);
        Mat& gx = tp->grad(x);
        Mat& ggamma = tp->grad(gamma);
        Mat& gbeta = tp->grad(beta);
        std::vector<double> dxhat(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < B; ++r) {
            const double* gr = g.row(r);
            const double* hr = xh.row(r);
            double s1 = 0.0, s2 = 0.0;
            for (int c = 0; c < n; ++c) {
                const double d = gr[c] * gv2.data[static_cast<std::size_t>(c)];
                dxhat[static_cast<std::size_t>(c)] = d;
                s1 += d;
                s2 += d * hr[c];
                ggamma.data[static_cast<std::size_t>(c)] += gr[c] * hr[c];
                gbeta.data[static_cast<std::size_t>(c)] += gr[c];
            }
            double* gxr = gx.row(r);
            const double iv = inv[static_cast<std::size_t>(r)];
            for (int c = 0; c < n; ++c) {
                gxr[c] += iv * (dxhat[static_cast<std::size_t>(c)] - s1 / n - hr[c] * s2 / n);
            }
        }
    });
}

NodeId softmax_rows(Tape& t, NodeId x) {
    const Mat& xv = t.value(x);
    const int B = xv.rows, n = xv.cols;
    Mat y(B, n);
    for (int r = 0; r < B; ++r) {
        const double* xr = xv.row(r);
        double* yr = y.row(r);
        double mx = xr[0];
        for (int c = 1; c < n; ++c) mx = std::max(mx, xr[c]);
        double z = 0.0;
        for (int c = 0; c < n; ++c) {
            yr[c] = std::exp(xr[c] - mx);
            z += yr[c];
        }
        for (int c = 0; c < n; ++c) yr[c] /= z;
    }
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, out, B, n]() {
        const Mat& p = tp->value(out);
        const Mat& g = tp->grad(out);
        Mat& gx = tp->grad(x);
        for (int r = 0; r < B; ++r) {
            const double* pr = p.row(r);
            const double* gr = g.row(r);
            double dot = 0.0;
            for (int c = 0; c < n; ++c) dot += pr[c] * gr[c];
            double* gxr = gx.row(r);
            for (int c = 0; c < n; ++c) gxr[c] += pr[c] * (gr[c] - dot);
        }
    });
}

NodeId softmax_cross_entropy(Tape& t, NodeId logits, const std::vector<int>& labels) {
    const Mat& lv = t.value(logits);
    const int B = lv.rows, C = lv.cols;
    require(static_cast<int>(labels.size()) == B, "softmax_cross_entropy: one label per row required");
    for (int y : labels) require(y >= 0 && y < C, "softmax_cross_entropy: label out of range");

    Mat probs(B, C);
    double loss = 0.0;
    for (int r = 0; r < B; ++r) {
        const double* lr = lv.row(r);
        double* pr = probs.row(r);
        double mx = lr[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, lr[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) {
            pr[c] = std::exp(lr[c] - mx);
            z += pr[c];
        }
        for (int c = 0; c < C; ++c) pr[c] /= z;
        loss += std::log(z) + mx - lr[labels[static_cast<std::size_t>(r)]];
    }
    loss /= B;

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(Mat::from(1, 1, {loss}),
                  [tp, logits, out, B, C, p = std::move(probs), ys = labels]() {
        const double g = tp->grad(out).at(0, 0);
        Mat& gx = tp->grad(logits);
        for (int r = 0; r < B; ++r) {
            const double* pr = p.row(r);
            double* gxr = gx.row(r);
            for (int c = 0; c < C; ++c) gxr[c] += g * pr[c] / B;
            gxr[ys[static_cast<std::size_t>(r)]] -= g / B;
        }
    });
}

NodeId mean_scalars(Tape& t, const std::vector<NodeId>& xs) {
    require(!xs.empty(), "mean_scalars: need at least one input");
    double acc = 0.0;
    for (NodeId id : xs) {
        const Mat& v = t.value(id);
        require(v.rows == 1 && v.cols == 1, "mean_scalars: inputs must be 1x1");
        acc += v.at(0, 0);
    }
    const double n = static_cast<double>(xs.size());
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(Mat::from(1, 1, {acc / n}), [tp, ids = xs, out, n]() {
        const double g = tp->grad(out).at(0, 0) / n;
        for (NodeId id : ids) tp->grad(id).at(0, 0) += g;
    });
}

NodeId proto_distances(Tape& t, NodeId z, NodeId prototypes) {
    const Mat& zv = t.value(z);
    const Mat& pv = t.value(prototypes);
    require(zv.cols == pv.cols, "proto_distances: feature widths disagree");
    const int B = zv.rows, K = pv.rows, d = zv.cols;
    Mat D(B, K);
    for (int b = 0; b < B; ++b) {
        const double* zb = zv.row(b);
        double* Db = D.row(b);
        for (int k = 0; k < K; ++k) {
            const double* pk = pv.row(k);
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = zb[j] - pk[j];
                acc += diff * diff;
            }
            Db[k] = std::sqrt(acc);
        }
    }
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(D), [tp, z, prototypes, out, B, K, d]() {
        const Mat& Dv = tp->value(out);
        const Mat& g = tp->grad(out);
        const Mat& zvv = tp->value(z);
        const Mat& pvv = tp->value(prototypes);
        Mat& gz = tp->grad(z);
        Mat& gp = tp->grad(prototypes);
        for (int b = 0; b < B; ++b) {
            const double* zb = zvv.row(b);
            const double* gb = g.row(b);
            const double* Db = Dv.row(b);
            double* gzb = gz.row(b);
            for (int k = 0; k < K; ++k) {
                if (Db[k] <= 0.0) continue;
                const double coef = gb[k] / Db[k];
                const double* pk = pvv.row(k);
                double* gpk = gp.row(k);
                for (int j = 0; j < d; ++j) {
                    const double diff = zb[j] - pk[j];
                    gzb[j] += coef * diff;
                    gpk[j] -= coef * diff;
                }
            }
        }
    });
}

NodeId weighted_sum(Tape& t, NodeId weights, const std::vector<NodeId>& items) {
    const Mat& wv = t.value(weights);
    require(!items.empty(), "weighted_sum: need at least one item");
    require(wv.cols == static_cast<int>(items.size()), "weighted_sum: one weight column per item required");
    const int B = wv.rows;
    const Mat& first = t.value(items[0]);
    const int d = first.cols;
    for (NodeId id : items) {
        const Mat& iv = t.value(id);
        require(iv.rows == B && iv.cols == d, "weighted_sum: item shape mismatch");
    }
    const int K = static_cast<int>(items.size());

    Mat y(B, d);
    for (int k = 0; k < K; ++k) {
        const Mat& iv = t.value(items[static_cast<std::size_t>(k)]);
        for (int b = 0; b < B; ++b) {
            const double wk = wv.at(b, k);
            const double* ib = iv.row(b);
            double* yb = y.row(b);
            for (int j = 0; j < d; ++j) yb[j] += wk * ib[j];
        }
    }

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, weights, ids = items, out, B, d, K]() {
        const Mat& g = tp->grad(out);
        const Mat& wvv = tp->value(weights);
        Mat& gw = tp->grad(weights);
        for (int k = 0; k < K; ++k) {
            const Mat& iv = tp->value(ids[static_cast<std::size_t>(k)]);
            Mat& gi = tp->grad(ids[static_cast<std::size_t>(k)]);
            for (int b = 0; b < B; ++b) {
                const double* gb = g.row(b);
                const double* ib = iv.row(b);
                double* gib = gi.row(b);
                const double wk = wvv.at(b, k);
                double dot = 0.0;
                for (int j = 0; j < d; ++j) {
                    gib[j] += wk * gb[j];
                    dot += ib[j] * gb[j];
                }
                gw.at(b, k) += dot;
            }
        }
    });
}

NodeId hard_top1(Tape& t, NodeId weights) {
    const Mat& wv = t.value(weights);
    Mat y(wv.rows, wv.cols);
    for (int r = 0; r < wv.rows; ++r) {
        const double* wr = wv.row(r);
        int best = 0;
        for (int c = 1; c < wv.cols; ++c) {
            if (wr[c] > wr[best]) best = c;
        }
        y.at(r, best) = 1.0;
    }
    return t.node(std::move(y), nullptr);
}

NodeId conv2d(Tape& t, NodeId x, NodeId w, NodeId bias,
              int B, int C, int H, int W, int OC, int K, int S) {
    const Mat& xv = t.value(x);
    const Mat& wv = t.value(w);
    const Mat& bv = t.value(bias);
    require(S >= 1 && K >= 1 && H >= K && W >= K, "conv2d: kernel does not fit input");
    require(xv.rows == B && xv.cols == C * H * W, "conv2d: input shape mismatch");
    require(wv.rows == OC && wv.cols == C * K * K, "conv2d: weight shape mismatch");
    require(bv.rows == 1 && bv.cols == OC, "conv2d: bias must be [1 x OC]");
    const int OH = kern::conv_out(H, K, S);
    const int OW = kern::conv_out(W, K, S);

    Mat y(B, OC * OH * OW);
    kern::conv2d_fwd(xv.data.data(), wv.data.data(), bv.data.data(), y.data.data(),
                     B, C, H, W, OC, K, S);

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, w, bias, out, B, C, H, W, OC, K, S]() {
        const Mat& g = tp->grad(out);
        const Mat& xvv = tp->value(x);
        const Mat& wvv = tp->value(w);
        Mat gx(B, C * H * W);
        kern::conv2d_bwd_input(wvv.data.data(), g.data.data(), gx.data.data(),
                               B, C, H, W, OC, K, S);
        tp->grad(x).add_scaled(gx, 1.0);
        Mat gw(OC, C * K * K);
        Mat gb(1, OC);
        kern::conv2d_bwd_weights(xvv.data.data(), g.data.data(), gw.data.data(), gb.data.data(),
                                 B, C, H, W, OC, K, S);
        tp->grad(w).add_scaled(gw, 1.0);
        tp->grad(bias).add_scaled(gb, 1.0);
    });
}

NodeId maxpool2d(Tape& t, NodeId x, int B, int C, int H, int W, int P) {
    const Mat& xv = t.value(x);
    require(P >= 1 && H >= P && W >= P, "maxpool2d: window larger than input");
    require(xv.rows == B && xv.cols == C * H * W, "maxpool2d: input shape mismatch");
    const int OH = kern::pool_out(H, P);
    const int OW = kern::pool_out(W, P);

    Mat y(B, C * OH * OW);
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(B) * C * OH * OW, 0);
    kern::maxpool2d_fwd(xv.data.data(), y.data.data(), argmax.data(), B, C, H, W, P);

    const std::int64_t x_len = static_cast<std::int64_t>(xv.data.size());
    const std::int64_t y_len = static_cast<std::int64_t>(y.data.size());
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, out, am = std::move(argmax), x_len, y_len]() {
        Mat gx(tp->value(x).rows, tp->value(x).cols);
        kern::maxpool2d_bwd(tp->grad(out).data.data(), am.data(), gx.data.data(), x_len, y_len);
        tp->grad(x).add_scaled(gx, 1.0);
    });
}

NodeId adaptive_avgpool2d(Tape& t, NodeId x, int B, int C, int H, int W, int T) {
    const Mat& xv = t.value(x);
    require(T >= 1 && H >= 1 && W >= 1, "adaptive_avgpool2d: dims must be positive");
    require(xv.rows == B && xv.cols == C * H * W, "adaptive_avgpool2d: input shape mismatch");

    Mat y(B, C * T * T);
    kern::adaptive_avgpool_fwd(xv.data.data(), y.data.data(), B, C, H, W, T);

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(std::move(y), [tp, x, out, B, C, H, W, T]() {
        Mat gx(B, C * H * W);
        kern::adaptive_avgpool_bwd(tp->grad(out).data.data(), gx.data.data(), B, C, H, W, T);
        tp->grad(x).add_scaled(gx, 1.0);
    });
}

}  // namespace srmoe::ops
