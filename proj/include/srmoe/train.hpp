#pragma once

// Mini-batch SGD training with per-epoch spectral telemetry and best-on-
// validation checkpointing.

#include <cstdint>
#include <vector>

#include "srmoe/config.hpp"
#include "srmoe/data.hpp"
#include "srmoe/moe.hpp"

namespace srmoe {

// value -= lr * grad for every trainable parameter. lr == 0 is an exact
// no-op (the values are left bitwise untouched).
void sgd_step(SrMoeModel& m, double lr);

// Top-1 accuracy over the whole set; argmax ties go to the lowest class.
double evaluate_accuracy(SrMoeModel& m, const Dataset& ds, int batch_size = 64);

struct EpochLog {
    int epoch = 0;                 // 1-based; the initial state is epoch 0
    LossBreakdown loss;            // sample-weighted mean over the epoch
    double val_accuracy = 0.0;
    std::vector<double> sigma;     // per-layer top singular value of the penalized weight
    std::vector<double> srank;     // per-layer stable rank of the penalized weight
};

struct TrainResult {
    std::vector<EpochLog> logs;                 // one entry per trained epoch
    std::vector<std::uint8_t> best_checkpoint;  // serialized model, highest val accuracy
    double best_val_accuracy = 0.0;
    int best_epoch = 0;                         // 0 means the untrained initialization
};

// Trains in place; m finishes at the final epoch's state while the result
// carries the best-validation checkpoint (ties keep the earliest epoch).
// Shuffling derives from (seed, epoch); identical inputs give bitwise-
// identical results. Throws NumericError if the loss stops being finite.
TrainResult train_model(SrMoeModel& m, const Dataset& train_set, const Dataset& val_set,
                        const TrainConfig& cfg, std::uint64_t seed);

}  // namespace srmoe
