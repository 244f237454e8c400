#include "srmoe/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "srmoe/kernels.hpp"

namespace srmoe {

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions disagree");
    }
    Mat c(a.rows, b.cols);
    kern::matmul(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols, b.cols);
    return c;
}

double frobenius_norm(const Mat& w) {
    double acc = 0.0;
    for (double x : w.data) acc += x * x;
    return std::sqrt(acc);
}

namespace {

// y = w v, y is rows-long.
void apply(const Mat& w, const std::vector<double>& v, std::vector<double>& y) {
    for (int r = 0; r < w.rows; ++r) {
        double acc = 0.0;
        const double* wr = w.row(r);
        for (int c = 0; c < w.cols; ++c) acc += wr[c] * v[c];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

// y = w^T u, y is cols-long.
void apply_t(const Mat& w, const std::vector<double>& u, std::vector<double>& y) {
    for (int c = 0; c < w.cols; ++c) y[static_cast<std::size_t>(c)] = 0.0;
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        const double ur = u[static_cast<std::size_t>(r)];
        for (int c = 0; c < w.cols; ++c) y[static_cast<std::size_t>(c)] += wr[c] * ur;
    }
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

void scale_to_unit(std::vector<double>& v, double n) {
    for (double& x : v) x /= n;
}

}  // namespace

SpectralPair spectral_pair(const Mat& w, int max_iters, double tol) {
    if (max_iters < 1) throw std::invalid_argument("spectral_pair: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("spectral_pair: tol must be positive");
    if (w.empty()) throw std::invalid_argument("spectral_pair: empty matrix");

    SpectralPair out;
    out.u.assign(static_cast<std::size_t>(w.rows), 0.0);
    out.v.assign(static_cast<std::size_t>(w.cols), 0.0);
    if (w.all_zero()) return out;

    const std::size_t cols = static_cast<std::size_t>(w.cols);
    std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(w.cols)));
    std::vector<double> wv(static_cast<std::size_t>(w.rows), 0.0);

    // The all-ones start can be annihilated by w even when w is nonzero;
    // canonical basis vectors cannot all be, so one of them recovers.
    apply(w, v, wv);
    if (norm2(wv) == 0.0) {
        for (std::size_t j = 0; j < cols; ++j) {
            std::fill(v.begin(), v.end(), 0.0);
            v[j] = 1.0;
            apply(w, v, wv);
            if (norm2(wv) > 0.0) break;
        }
    }

    double sigma_prev = -1.0;
    double sigma = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        // One round of v <- normalize(w^T w v).
        apply(w, v, wv);
        apply_t(w, wv, v);
        const double vn = norm2(v);
        if (vn == 0.0) break;  // numerically annihilated; keep last sigma
        scale_to_unit(v, vn);

        apply(w, v, wv);
        sigma = norm2(wv);
        out.iters = it;
        if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) < tol) break;
        sigma_prev = sigma;
    }

    out.sigma = sigma;
    out.v = v;
    if (sigma > 0.0) {
        for (std::size_t i = 0; i < wv.size(); ++i) out.u[i] = wv[i] / sigma;
    }
    return out;
}

double spectral_norm(const Mat& w, int max_iters, double tol) {
    return spectral_pair(w, max_iters, tol).sigma;
}

double stable_rank(const Mat& w, int max_iters, double tol) {
    if (w.all_zero()) {
        throw std::invalid_argument("stable_rank: undefined for the zero matrix");
    }
    const double sigma = spectral_norm(w, max_iters, tol);
    const double f = frobenius_norm(w);
    return (f * f) / (sigma * sigma);
}

}  // namespace srmoe
