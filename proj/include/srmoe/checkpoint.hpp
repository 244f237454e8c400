#pragma once

// Model persistence. The binary checkpoint stores the model configuration
// (as JSON) plus every parameter's name, shape, and raw values; a save ->
// load round trip is bit-exact. Trainable flags are runtime state and are
// not stored: a loaded model has every parameter trainable.

#include <cstdint>
#include <string>
#include <vector>

#include "srmoe/moe.hpp"

namespace srmoe {

std::vector<std::uint8_t> serialize_model(SrMoeModel& m);
SrMoeModel deserialize_model(const std::uint8_t* data, std::size_t len);
SrMoeModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(SrMoeModel& m, const std::string& path);
SrMoeModel load_checkpoint(const std::string& path);

// Cheap value-only snapshot for repeated in-process restores (one per
// adaptation trial). Matrices appear in visit_params order; restore
// requires an identically-configured model.
std::vector<Mat> snapshot_values(SrMoeModel& m);
void restore_values(SrMoeModel& m, const std::vector<Mat>& snapshot);

}  // namespace srmoe
