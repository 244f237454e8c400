#pragma once

// A learnable tensor. Gradients always accumulate during the backward pass,
// whether or not the parameter is trainable; the trainable flag only tells
// the optimizer (and the one-shot update) to leave the value alone. Probes
// that measure gradient flow through frozen parts rely on this split.

#include <string>
#include <utility>

#include "srmoe/mat.hpp"

namespace srmoe {

struct Param {
    std::string name;
    Mat value;
    Mat grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = zeros_like(value);
    }

    void zero_grad() { grad.fill(0.0); }
};

}  // namespace srmoe
