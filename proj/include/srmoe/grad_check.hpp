#pragma once

// Central finite-difference verification of tape gradients.

#include <functional>
#include <string>
#include <vector>

#include "srmoe/param.hpp"

namespace srmoe {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_coord = -1;
};

// loss_with_grads computes the objective from the params' current values,
// runs a backward pass, and returns the scalar; gradients are expected to
// accumulate into each Param's grad field. grad_check zeroes the grads,
// calls it once to capture the analytic gradient, then probes every
// coordinate of every trainable param with a central difference of the
// given step. Frozen (trainable=false) params are skipped.
//
// Relative error per coordinate: |a - n| / max(|a|, |n|, 1e-5); the floor
// keeps finite-difference noise on near-zero coordinates from registering
// as large relative errors.
//
// refine_below > 0 enables per-coordinate step refinement: a coordinate
// whose relative error exceeds it is re-probed at steps shrinking by decades
// down to step/10^4, and the smallest error of the probes is kept. A central
// difference is invalid when its probe window straddles a nonsmooth point (a
// ReLU or max-pool kink); shrinking the window moves the kink outside it,
// while a genuine gradient defect stays wrong at every step size. Taking the
// minimum is safe because cancellation noise at the smallest steps is still
// orders of magnitude below any real defect it could mask.
GradCheckResult grad_check(const std::function<double()>& loss_with_grads,
                           const std::vector<Param*>& params, double step = 1e-6,
                           double refine_below = 0.0);

}  // namespace srmoe
