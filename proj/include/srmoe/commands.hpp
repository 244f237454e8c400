#pragma once

// Command implementations behind the CLI. Each command writes its outputs
// (and the resolved config) into cfg.out_dir and throws on failure:
// UsageError for bad invocations, DataError for missing or malformed
// files, NumericError when training diverges.

#include <string>
#include <vector>

#include "srmoe/config.hpp"

namespace srmoe {

// Generates the synthetic corpus and writes train/val/test/novel tensor
// files into cfg.out_dir.
void cmd_gen_data(const RunConfig& cfg);

// Trains a fresh model on data_dir's train/val files; writes the best-
// validation checkpoint and a per-epoch log CSV.
void cmd_train(const RunConfig& cfg, const std::string& data_dir);

// Runs the one-shot interference experiment from a trained checkpoint over
// data_dir's novel/test/train files; writes report.json plus CSV tables.
// The model configuration comes from the checkpoint; only hard_routing is
// taken from cfg.model (it is an adaptation-time ablation switch).
void cmd_oneshot(const RunConfig& cfg, const std::string& data_dir,
                 const std::string& checkpoint_path);

// Consolidates the report.json of several run directories into a
// side-by-side CSV and a plain-text table (also printed to stdout).
void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// Seed streams, so the same root seed drives independent generators for
// each pipeline stage.
std::uint64_t split_seed(std::uint64_t root);
std::uint64_t model_seed(std::uint64_t root);
std::uint64_t train_seed(std::uint64_t root);
std::uint64_t anchor_seed(std::uint64_t root);

}  // namespace srmoe
