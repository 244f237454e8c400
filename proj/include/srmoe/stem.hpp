#pragma once

// Shared convolutional feature extractor: two conv/relu/maxpool stages, an
// adaptive average pool to a fixed grid, and a linear projection to the
// embedding width the routed layers operate in.

#include <functional>

#include "srmoe/ops.hpp"
#include "srmoe/param.hpp"
#include "srmoe/rng.hpp"
#include "srmoe/tape.hpp"

namespace srmoe {

struct StemConfig {
    int in_channels = 1;
    int height = 16;
    int width = 16;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int kernel = 3;
    int pool = 2;
    int out_grid = 4;   // adaptive pool target, per side
    int embed_dim = 32;

    // Flattened width after the adaptive pool, i.e. the projection fan-in.
    int pooled_features() const { return conv2_channels * out_grid * out_grid; }
};

struct StemParams {
    Param conv1_w, conv1_b;
    Param conv2_w, conv2_b;
    Param proj_w, proj_b;

    static StemParams init(const StemConfig& cfg, Rng& rng);

    // Fixed traversal order; checkpoints and the optimizer rely on it.
    void visit(const std::function<void(Param&)>& f);
};

// images is a [B x in_channels*height*width] node; returns a
// [B x embed_dim] node.
NodeId stem_forward(Tape& t, const StemConfig& cfg, StemParams& p, NodeId images);

}  // namespace srmoe
