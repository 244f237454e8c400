#pragma once

// Run configuration: everything a command needs, serializable to JSON so a
// run can write its resolved settings next to its outputs and be replayed
// exactly. Parsing is strict: unknown keys are errors, absent keys keep
// their defaults.

#include <cstdint>
#include <string>

#include "srmoe/data.hpp"
#include "srmoe/moe.hpp"

namespace srmoe {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double lr = 0.05;

    void validate() const;
};

struct OneshotConfig {
    double lr = 0.01;
    int steps = 1;
    int anchor_size = 16;
    bool update_head = false;

    void validate() const;
};

struct RunConfig {
    ModelConfig model;
    DataConfig data;
    TrainConfig train;
    OneshotConfig oneshot;
    std::uint64_t seed = 1;
    std::string out_dir = "run";

    void validate() const;
};

std::string to_json_string(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace srmoe
