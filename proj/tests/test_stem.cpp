#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "srmoe/grad_check.hpp"
#include "srmoe/mat.hpp"
#include "srmoe/rng.hpp"
#include "srmoe/stem.hpp"
#include "srmoe/tape.hpp"

using srmoe::Mat;
using srmoe::NodeId;
using srmoe::Param;
using srmoe::Rng;
using srmoe::StemConfig;
using srmoe::StemParams;
using srmoe::Tape;

namespace {
StemConfig tiny_cfg() {
    StemConfig cfg;
    cfg.in_channels = 1;
    cfg.height = 10;
    cfg.width = 10;
    cfg.conv1_channels = 2;
    cfg.conv2_channels = 3;
    cfg.kernel = 3;
    cfg.pool = 2;
    cfg.out_grid = 2;
    cfg.embed_dim = 5;
    return cfg;
}

Mat random_images(const StemConfig& cfg, int batch, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(batch, cfg.in_channels * cfg.height * cfg.width);
    for (double& v : m.data) v = rng.normal(0.0, 1.0);
    return m;
}
}  // namespace

TEST_CASE("stem output shape is batch x embed_dim") {
    const StemConfig cfg = tiny_cfg();
    Rng rng(11);
    StemParams p = StemParams::init(cfg, rng);
    Tape t;
    const NodeId out = srmoe::stem_forward(t, cfg, p, t.constant(random_images(cfg, 3, 12)));
    CHECK(t.value(out).rows == 3);
    CHECK(t.value(out).cols == cfg.embed_dim);

    const StemConfig dflt;  // default 16x16 configuration
    Rng rng2(13);
    StemParams pd = StemParams::init(dflt, rng2);
    Tape t2;
    const NodeId out2 = srmoe::stem_forward(t2, dflt, pd, t2.constant(random_images(dflt, 2, 14)));
    CHECK(t2.value(out2).rows == 2);
    CHECK(t2.value(out2).cols == dflt.embed_dim);
}

TEST_CASE("stem parameter shapes and traversal order") {
    const StemConfig cfg = tiny_cfg();
    Rng rng(21);
    StemParams p = StemParams::init(cfg, rng);

    std::vector<std::pair<int, int>> shapes;
    p.visit([&](Param& q) { shapes.push_back({q.value.rows, q.value.cols}); });
    REQUIRE(shapes.size() == 6);
    // conv weights are stored as [out_channels x in_channels*k*k].
    CHECK(shapes[0] == std::pair<int, int>{cfg.conv1_channels, cfg.in_channels * cfg.kernel * cfg.kernel});
    CHECK(shapes[1] == std::pair<int, int>{1, cfg.conv1_channels});
    CHECK(shapes[2] == std::pair<int, int>{cfg.conv2_channels, cfg.conv1_channels * cfg.kernel * cfg.kernel});
    CHECK(shapes[3] == std::pair<int, int>{1, cfg.conv2_channels});
    CHECK(shapes[4] == std::pair<int, int>{cfg.pooled_features(), cfg.embed_dim});
    CHECK(shapes[5] == std::pair<int, int>{1, cfg.embed_dim});
}

TEST_CASE("stem init and forward are deterministic in the seed") {
    const StemConfig cfg = tiny_cfg();
    const Mat imgs = random_images(cfg, 4, 33);

    auto run = [&]() {
        Rng rng(77);
        StemParams p = StemParams::init(cfg, rng);
        Tape t;
        const NodeId out = srmoe::stem_forward(t, cfg, p, t.constant(imgs));
        return t.value(out).data;
    };
    const std::vector<double> a = run();
    const std::vector<double> b = run();
    CHECK(a == b);

    Rng other(78);
    StemParams p2 = StemParams::init(cfg, other);
    Tape t2;
    const NodeId out2 = srmoe::stem_forward(t2, cfg, p2, t2.constant(imgs));
    CHECK(t2.value(out2).data != a);  // a different seed moves the output
}

TEST_CASE("stem gradients match finite differences end to end") {
    const StemConfig cfg = tiny_cfg();
    Rng rng(41);
    StemParams p = StemParams::init(cfg, rng);
    const Mat imgs = random_images(cfg, 2, 42);

    // Reduce the embedding to a scalar with a fixed probe so every parameter
    // receives gradient signal.
    Rng probe_rng(43);
    Mat left(1, 2), right(cfg.embed_dim, 1);
    for (double& v : left.data) v = probe_rng.normal(0.0, 1.0);
    for (double& v : right.data) v = probe_rng.normal(0.0, 1.0);

    std::vector<Param*> params;
    p.visit([&](Param& q) { params.push_back(&q); });

    auto loss = [&]() {
        Tape t;
        const NodeId out = srmoe::stem_forward(t, cfg, p, t.constant(imgs));
        const NodeId s = srmoe::ops::matmul(
            t, srmoe::ops::matmul(t, t.constant(left), out), t.constant(right));
        t.backward(s);
        return t.value(s).at(0, 0);
    };
    const auto res = srmoe::grad_check(loss, params);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("rows of a batch are processed independently") {
    const StemConfig cfg = tiny_cfg();
    Rng rng(51);
    StemParams p = StemParams::init(cfg, rng);
    const Mat batch = random_images(cfg, 3, 52);

    Tape t;
    const Mat full = t.value(srmoe::stem_forward(t, cfg, p, t.constant(batch)));

    for (int i = 0; i < 3; ++i) {
        Mat one(1, batch.cols);
        for (int j = 0; j < batch.cols; ++j) one.at(0, j) = batch.at(i, j);
        Tape ti;
        const Mat row = ti.value(srmoe::stem_forward(ti, cfg, p, ti.constant(one)));
        for (int j = 0; j < full.cols; ++j)
            CHECK(row.at(0, j) == doctest::Approx(full.at(i, j)).epsilon(1e-12));
    }
}
