#pragma once

// Deterministic report writers. JSON uses sorted keys and shortest
// round-trip doubles; CSV prints doubles with %.17g. Identical inputs
// always produce identical bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "srmoe/adaptation.hpp"
#include "srmoe/train.hpp"

namespace srmoe {

// Versioned machine-readable interference report (schema_version 1).
std::string interference_report_json(const InterferenceReport& rep, const std::string& mode,
                                     const OneshotConfig& cfg, std::uint64_t seed);

// Columns: epoch,task,spec,rank,div,total,val_accuracy,
//          sigma_0..sigma_{N-1},stable_rank_0..stable_rank_{N-1}
std::string train_log_csv(const std::vector<EpochLog>& logs, int num_layers);

// Columns: class,delta
std::string class_deltas_csv(const InterferenceReport& rep);

// Columns: class,layer,expert,count
std::string utilization_csv(const Utilization& u);

// Columns: layer,expert,grad_norm
std::string vitality_csv(const Mat& vitality);

// A parsed-back subset of an interference report, for consolidation.
struct ReportSummary {
    std::string run_name;
    std::string mode;
    double pre_accuracy = 0.0;
    double mean_delta = 0.0;
    int path_diversity = 0;
    std::vector<double> class_delta;
};

ReportSummary parse_report_json(const std::string& text, const std::string& run_name);

// Side-by-side consolidation of several runs (column order = input order).
std::string comparison_csv(const std::vector<ReportSummary>& runs);
std::string comparison_text(const std::vector<ReportSummary>& runs);

}  // namespace srmoe
