#include "srmoe/stem.hpp"

#include <cmath>
#include <stdexcept>

#include "srmoe/kernels.hpp"

namespace srmoe {

StemParams StemParams::init(const StemConfig& cfg, Rng& rng) {
    const int k2 = cfg.kernel * cfg.kernel;
    const double sd1 = std::sqrt(2.0 / (cfg.in_channels * k2));
    const double sd2 = std::sqrt(2.0 / (cfg.conv1_channels * k2));
    const double sd3 = std::sqrt(2.0 / cfg.pooled_features());
    StemParams p;
    p.conv1_w = Param("stem.conv1.w",
                      random_normal(cfg.conv1_channels, cfg.in_channels * k2, sd1, rng));
    p.conv1_b = Param("stem.conv1.b", Mat(1, cfg.conv1_channels));
    p.conv2_w = Param("stem.conv2.w",
                      random_normal(cfg.conv2_channels, cfg.conv1_channels * k2, sd2, rng));
    p.conv2_b = Param("stem.conv2.b", Mat(1, cfg.conv2_channels));
    p.proj_w = Param("stem.proj.w",
                     random_normal(cfg.pooled_features(), cfg.embed_dim, sd3, rng));
    p.proj_b = Param("stem.proj.b", Mat(1, cfg.embed_dim));
    return p;
}

void StemParams::visit(const std::function<void(Param&)>& f) {
    f(conv1_w);
    f(conv1_b);
    f(conv2_w);
    f(conv2_b);
    f(proj_w);
    f(proj_b);
}

NodeId stem_forward(Tape& t, const StemConfig& cfg, StemParams& p, NodeId images) {
    const Mat& xv = t.value(images);
    const int B = xv.rows;
    if (xv.cols != cfg.in_channels * cfg.height * cfg.width) {
        throw std::invalid_argument("stem_forward: image width does not match the configuration");
    }

    const NodeId c1w = t.leaf(p.conv1_w);
    const NodeId c1b = t.leaf(p.conv1_b);
    const NodeId c2w = t.leaf(p.conv2_w);
    const NodeId c2b = t.leaf(p.conv2_b);
    const NodeId pw = t.leaf(p.proj_w);
    const NodeId pb = t.leaf(p.proj_b);

    int h = cfg.height, w = cfg.width;
    NodeId z = ops::conv2d(t, images, c1w, c1b, B, cfg.in_channels, h, w,
                           cfg.conv1_channels, cfg.kernel, 1);
    h = kern::conv_out(h, cfg.kernel, 1);
    w = kern::conv_out(w, cfg.kernel, 1);
    z = ops::relu(t, z);
    z = ops::maxpool2d(t, z, B, cfg.conv1_channels, h, w, cfg.pool);
    h = kern::pool_out(h, cfg.pool);
    w = kern::pool_out(w, cfg.pool);

    z = ops::conv2d(t, z, c2w, c2b, B, cfg.conv1_channels, h, w,
                    cfg.conv2_channels, cfg.kernel, 1);
    h = kern::conv_out(h, cfg.kernel, 1);
    w = kern::conv_out(w, cfg.kernel, 1);
    z = ops::relu(t, z);
    z = ops::maxpool2d(t, z, B, cfg.conv2_channels, h, w, cfg.pool);
    h = kern::pool_out(h, cfg.pool);
    w = kern::pool_out(w, cfg.pool);

    z = ops::adaptive_avgpool2d(t, z, B, cfg.conv2_channels, h, w, cfg.out_grid);
    return ops::linear(t, z, pw, pb);
}

}  // namespace srmoe
