#pragma once

// Dense linear algebra with the spectral quantities the regularizers need.
// All functions are pure and thread-safe.

#include <vector>

#include "srmoe/mat.hpp"

namespace srmoe {

// Standard matrix product; throws std::invalid_argument on a dimension
// mismatch.
Mat matmul(const Mat& a, const Mat& b);

double frobenius_norm(const Mat& w);

// Result of the power iteration on w^T w: the dominant singular value and
// its left/right singular vectors. For a zero matrix sigma is 0 and the
// vectors are zero.
struct SpectralPair {
    double sigma = 0.0;
    std::vector<double> u;  // length rows
    std::vector<double> v;  // length cols
    int iters = 0;
};

// Power iteration on w^T w with a deterministic start (normalized all-ones;
// falls back to canonical basis vectors if that start lies in the null
// space). Stops when successive sigma estimates differ by less than tol or
// after max_iters rounds.
SpectralPair spectral_pair(const Mat& w, int max_iters = 100, double tol = 1e-9);

// Largest singular value. Zero matrix returns 0 without iterating.
double spectral_norm(const Mat& w, int max_iters = 100, double tol = 1e-9);

// ||w||_F^2 / sigma_max^2. Lies in [1, min(rows, cols)] up to iteration
// tolerance. Throws std::invalid_argument for the zero matrix, where the
// quantity is undefined.
double stable_rank(const Mat& w, int max_iters = 100, double tol = 1e-9);

}  // namespace srmoe
