#pragma once

// One-shot adaptation workflow: pick the novel sample's winning expert
// path, update only those experts on an anchor-stabilized batch, and
// quantify what the update did to everything else.

#include <cstdint>
#include <vector>

#include "srmoe/config.hpp"
#include "srmoe/data.hpp"
#include "srmoe/moe.hpp"

namespace srmoe {

struct SurgicalPlan {
    std::vector<int> path;  // winning expert per layer
    double lr = 0.01;
    int steps = 1;
    int anchor_size = 16;
    bool update_head = false;
};

// Per-layer argmax routing weight for a single sample [1 x features];
// ties break to the lowest expert index.
std::vector<int> winning_path(SrMoeModel& m, const Mat& x_new);

// winning_path plus the one-shot hyperparameters folded into a plan.
SurgicalPlan make_plan(SrMoeModel& m, const Mat& x_new, const OneshotConfig& cfg);

// plan.steps SGD steps on the combined batch (anchor rows first, the novel
// sample last) with soft routing, updating only the winning-path experts
// (plus the head when the plan says so). Every other parameter is left
// bitwise unchanged; all trainable flags are restored to true on exit.
// An empty anchor batch is allowed but warned about on stderr.
void surgical_update(SrMoeModel& m, const Mat& x_new, int y_new,
                     const Mat& anchor_images, const std::vector<int>& anchor_labels,
                     const SurgicalPlan& plan);

// One unrestricted backward pass over the combined batch; returns the
// [num_layers x num_experts] matrix of L2 norms over each expert's
// concatenated parameter gradients. Gradients are zeroed before and after.
Mat gradient_vitality(SrMoeModel& m, const Mat& x_new, int y_new,
                      const Mat& anchor_images, const std::vector<int>& anchor_labels);

struct Utilization {
    int classes = 0;
    int layers = 0;
    int experts = 0;
    std::vector<std::int64_t> counts;  // indexed [class][layer][expert]

    std::int64_t& at(int c, int l, int e);
    std::int64_t at(int c, int l, int e) const;
};

// Counts of per-layer argmax experts grouped by true class.
Utilization path_utilization(SrMoeModel& m, const Dataset& ds, int batch_size = 64);

// Per-class majority expert per layer (ties to the lowest index).
std::vector<std::vector<int>> majority_paths(const Utilization& u);

// Number of distinct class-majority paths.
int path_diversity(const Utilization& u);

struct InterferenceReport {
    double pre_accuracy = 0.0;
    std::vector<double> class_delta;               // mean accuracy delta per novel class
    double mean_delta = 0.0;                       // arithmetic mean of class_delta
    int path_diversity = 0;                        // pre-update model, test split
    std::vector<std::vector<int>> majority_path;   // per class, pre-update model
    Mat vitality;                                  // [layers x experts], mean over trials
    std::vector<double> per_sample_delta;          // one entry per novel sample
    int novel_count = 0;
};

// For every novel sample: restore the model, plan, measure vitality,
// apply the surgical update, and re-evaluate the full test split. Trials
// are independent (each works on a private copy); the passed model is
// unchanged on return. Deterministic given (model, datasets, cfg, seed):
// anchor batches derive from (seed, trial index).
InterferenceReport interference_experiment(SrMoeModel& m, const Dataset& novel,
                                           const Dataset& test, const Dataset& anchor_source,
                                           const OneshotConfig& cfg, std::uint64_t seed);

}  // namespace srmoe
