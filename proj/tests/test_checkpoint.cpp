#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "srmoe/checkpoint.hpp"
#include "srmoe/errors.hpp"
#include "srmoe/mat.hpp"
#include "srmoe/moe.hpp"
#include "srmoe/rng.hpp"

using srmoe::Mat;
using srmoe::ModelConfig;
using srmoe::Param;
using srmoe::RoutingMode;
using srmoe::SrMoeModel;

namespace {
ModelConfig small_cfg(RoutingMode mode) {
    ModelConfig cfg;
    cfg.stem.height = 10;
    cfg.stem.width = 10;
    cfg.stem.conv1_channels = 2;
    cfg.stem.conv2_channels = 3;
    cfg.stem.out_grid = 2;
    cfg.stem.embed_dim = 6;
    cfg.embed_dim = 6;
    cfg.hidden_dim = 5;
    cfg.num_layers = 2;
    cfg.num_experts = 3;
    cfg.mode = mode;
    return cfg;
}

std::vector<std::pair<std::string, std::vector<double>>> collect(SrMoeModel& m) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    m.visit_params([&](Param& p) { out.push_back({p.name, p.value.data}); });
    return out;
}
}  // namespace

TEST_CASE("serialize then deserialize reproduces values bit-exactly") {
    for (RoutingMode mode : {RoutingMode::Baseline, RoutingMode::Spectral}) {
        SrMoeModel m = SrMoeModel::init(small_cfg(mode), 77);
        const auto bytes = srmoe::serialize_model(m);
        SrMoeModel back = srmoe::deserialize_model(bytes);

        const auto a = collect(m);
        const auto b = collect(back);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].first == b[i].first);
            CHECK(a[i].second == b[i].second);
        }
        CHECK(back.cfg.mode == mode);
        CHECK(back.cfg.embed_dim == 6);
        // Raw serialized bytes are reproducible too.
        CHECK(srmoe::serialize_model(back) == bytes);
    }
}

TEST_CASE("loaded model is fully trainable") {
    SrMoeModel m = SrMoeModel::init(small_cfg(RoutingMode::Spectral), 78);
    m.layers[0].experts[0].w1.trainable = false;
    const auto bytes = srmoe::serialize_model(m);
    SrMoeModel back = srmoe::deserialize_model(bytes);
    bool all_trainable = true;
    back.visit_params([&](Param& p) { all_trainable = all_trainable && p.trainable; });
    CHECK(all_trainable);
}

TEST_CASE("file save and load round trip") {
    const std::string path = "roundtrip.srmo";
    SrMoeModel m = SrMoeModel::init(small_cfg(RoutingMode::Clustering), 79);
    srmoe::save_checkpoint(m, path);
    SrMoeModel back = srmoe::load_checkpoint(path);
    CHECK(collect(back) == collect(m));
    std::remove(path.c_str());
}

TEST_CASE("corrupt checkpoints raise structured errors") {
    CHECK_THROWS_AS(srmoe::load_checkpoint("no-such.srmo"), srmoe::DataError);

    SrMoeModel m = srmoe::SrMoeModel::init(small_cfg(RoutingMode::Spectral), 80);
    auto bytes = srmoe::serialize_model(m);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(srmoe::deserialize_model(bytes), srmoe::DataError);
    }
    SUBCASE("truncated") {
        bytes.resize(bytes.size() / 2);
        CHECK_THROWS_AS(srmoe::deserialize_model(bytes), srmoe::DataError);
    }
    SUBCASE("trailing garbage") {
        bytes.push_back(0);
        CHECK_THROWS_AS(srmoe::deserialize_model(bytes), srmoe::DataError);
    }
}

TEST_CASE("snapshot and restore round trip in visit order") {
    SrMoeModel m = SrMoeModel::init(small_cfg(RoutingMode::Spectral), 81);
    const auto before = collect(m);
    const std::vector<Mat> snap = srmoe::snapshot_values(m);

    // Perturb everything, then restore.
    srmoe::Rng rng(82);
    m.visit_params([&](Param& p) {
        for (double& v : p.value.data) v += rng.normal(0.0, 0.1);
    });
    CHECK(collect(m) != before);
    srmoe::restore_values(m, snap);
    CHECK(collect(m) == before);
}

TEST_CASE("restore rejects a mismatched snapshot") {
    SrMoeModel m = SrMoeModel::init(small_cfg(RoutingMode::Spectral), 83);
    std::vector<Mat> snap = srmoe::snapshot_values(m);
    snap.pop_back();
    CHECK_THROWS(srmoe::restore_values(m, snap));
}
