#pragma once

// Regularization terms, each in two forms: a pure function of plain
// matrices (used by reports and tests) and a tape operation producing a
// differentiable 1x1 node.
//
// The spectral terms differentiate through the singular value via its
// rank-one expansion: d(sigma)/dW = u v^T with the dominant singular
// vectors held fixed. This is exact when sigma is simple.

#include <vector>

#include "srmoe/mat.hpp"
#include "srmoe/tape.hpp"

namespace srmoe {

// (sigma_max(w) - sigma_target)^2.
double spec_norm_penalty(const Mat& w, double sigma_target,
                         int max_iters = 100, double tol = 1e-9);

// (stable_rank(w) - rho_target)^2. Undefined (throws) for the zero matrix.
double rank_penalty(const Mat& w, double rho_target,
                    int max_iters = 100, double tol = 1e-9);

// Squared coefficient of variation of a usage profile: (std/mean)^2 with
// the population standard deviation. Requires a nonempty profile with
// positive mean. Zero when usage is perfectly uniform; K-1 in the fully
// collapsed one-hot case.
double diversity_loss(const std::vector<double>& usage);

// Column means of a routing-weight matrix [B x K]: the batch usage profile.
std::vector<double> usage_profile(const Mat& routing_weights);

// Differentiable counterparts. w / routing_weights are tape nodes.
NodeId spec_norm_penalty_op(Tape& t, NodeId w, double sigma_target,
                            int max_iters = 100, double tol = 1e-9);
NodeId rank_penalty_op(Tape& t, NodeId w, double rho_target,
                       int max_iters = 100, double tol = 1e-9);
NodeId diversity_loss_op(Tape& t, NodeId routing_weights);

// Per-batch loss decomposition, reported by training and the one-shot
// harness. total = task + alpha * spec + alpha * rank + beta * div.
struct LossBreakdown {
    double task = 0.0;
    double spec = 0.0;
    double rank = 0.0;
    double div = 0.0;
    double total = 0.0;
};

}  // namespace srmoe
