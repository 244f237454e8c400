#include "srmoe/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "srmoe/linalg.hpp"

namespace srmoe {

double spec_norm_penalty(const Mat& w, double sigma_target, int max_iters, double tol) {
    const double d = spectral_norm(w, max_iters, tol) - sigma_target;
    return d * d;
}

double rank_penalty(const Mat& w, double rho_target, int max_iters, double tol) {
    const double d = stable_rank(w, max_iters, tol) - rho_target;
    return d * d;
}

double diversity_loss(const std::vector<double>& usage) {
    if (usage.empty()) throw std::invalid_argument("diversity_loss: empty usage profile");
    const double n = static_cast<double>(usage.size());
    double mean = 0.0;
    for (double p : usage) mean += p;
    mean /= n;
    // Reject genuinely non-positive means; a NaN mean (diverged upstream
    // state) flows through so callers see a non-finite loss, not a throw.
    if (mean <= 0.0) throw std::invalid_argument("diversity_loss: usage mean must be positive");
    double var = 0.0;
    for (double p : usage) {
        const double d = p - mean;
        var += d * d;
    }
    var /= n;
    return var / (mean * mean);
}

std::vector<double> usage_profile(const Mat& routing_weights) {
    if (routing_weights.empty()) throw std::invalid_argument("usage_profile: empty matrix");
    std::vector<double> p(static_cast<std::size_t>(routing_weights.cols), 0.0);
    for (int r = 0; r < routing_weights.rows; ++r) {
        const double* wr = routing_weights.row(r);
        for (int c = 0; c < routing_weights.cols; ++c) p[static_cast<std::size_t>(c)] += wr[c];
    }
    for (double& x : p) x /= routing_weights.rows;
    return p;
}

NodeId spec_norm_penalty_op(Tape& t, NodeId w, double sigma_target, int max_iters, double tol) {
    const SpectralPair sp = spectral_pair(t.value(w), max_iters, tol);
    const double diff = sp.sigma - sigma_target;
    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(Mat::from(1, 1, {diff * diff}), [tp, w, out, sp, diff]() {
        const double g = tp->grad(out).at(0, 0) * 2.0 * diff;
        Mat& gw = tp->grad(w);
        for (int r = 0; r < gw.rows; ++r) {
            double* gr = gw.row(r);
            const double ur = sp.u[static_cast<std::size_t>(r)];
            for (int c = 0; c < gw.cols; ++c) gr[c] += g * ur * sp.v[static_cast<std::size_t>(c)];
        }
    });
}

NodeId rank_penalty_op(Tape& t, NodeId w, double rho_target, int max_iters, double tol) {
    const Mat& wv = t.value(w);
    if (wv.all_zero()) {
        throw std::invalid_argument("rank_penalty_op: undefined for the zero matrix");
    }
    const SpectralPair sp = spectral_pair(wv, max_iters, tol);
    const double f = frobenius_norm(wv);
    const double f2 = f * f;
    const double sigma = sp.sigma;
    const double rank = f2 / (sigma * sigma);
    const double diff = rank - rho_target;

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(Mat::from(1, 1, {diff * diff}), [tp, w, out, sp, f2, sigma, diff]() {
        // d(rank)/dW = 2 W / sigma^2 - (2 ||W||_F^2 / sigma^3) u v^T.
        const double g = tp->grad(out).at(0, 0) * 2.0 * diff;
        const double a = 2.0 / (sigma * sigma);
        const double b = 2.0 * f2 / (sigma * sigma * sigma);
        const Mat& wvv = tp->value(w);
        Mat& gw = tp->grad(w);
        for (int r = 0; r < gw.rows; ++r) {
            double* gr = gw.row(r);
            const double* wr = wvv.row(r);
            const double ur = sp.u[static_cast<std::size_t>(r)];
            for (int c = 0; c < gw.cols; ++c) {
                gr[c] += g * (a * wr[c] - b * ur * sp.v[static_cast<std::size_t>(c)]);
            }
        }
    });
}

NodeId diversity_loss_op(Tape& t, NodeId routing_weights) {
    const Mat& wv = t.value(routing_weights);
    const std::vector<double> p = usage_profile(wv);
    const double loss = diversity_loss(p);

    const int B = wv.rows, K = wv.cols;
    const double n = static_cast<double>(K);
    double mean = 0.0;
    for (double x : p) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : p) {
        const double d = x - mean;
        var += d * d;
    }
    var /= n;

    Tape* tp = &t;
    const NodeId out = t.size();
    return t.node(Mat::from(1, 1, {loss}), [tp, routing_weights, out, B, K, n, mean, var, p]() {
        // L = var / mean^2 with both var and mean functions of the usage
        // profile, which is itself the column mean of the weights:
        // dL/dp_i = 2 (p_i - mean) / (n mean^2) - 2 var / (n mean^3).
        const double g = tp->grad(out).at(0, 0);
        Mat& gw = tp->grad(routing_weights);
        for (int k = 0; k < K; ++k) {
            const double dLdp = 2.0 * (p[static_cast<std::size_t>(k)] - mean) / (n * mean * mean)
                              - 2.0 * var / (n * mean * mean * mean);
            const double per_entry = g * dLdp / B;
            for (int b = 0; b < B; ++b) gw.at(b, k) += per_entry;
        }
    });
}

}  // namespace srmoe
