#include "srmoe/reports.hpp"

#include <cstdio>
#include <sstream>
#include <string>

#include "json.hpp"

#include "srmoe/errors.hpp"

namespace srmoe {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string interference_report_json(const InterferenceReport& rep, const std::string& mode,
                                     const OneshotConfig& cfg, std::uint64_t seed) {
    json vit = json::array();
    for (int l = 0; l < rep.vitality.rows; ++l) {
        json row = json::array();
        for (int e = 0; e < rep.vitality.cols; ++e) row.push_back(rep.vitality.at(l, e));
        vit.push_back(std::move(row));
    }
    json j{{"schema_version", 1},
           {"mode", mode},
           {"seed", seed},
           {"oneshot", json{{"lr", cfg.lr},
                            {"steps", cfg.steps},
                            {"anchor_size", cfg.anchor_size},
                            {"update_head", cfg.update_head}}},
           {"pre_accuracy", rep.pre_accuracy},
           {"mean_delta", rep.mean_delta},
           {"class_delta", rep.class_delta},
           {"path_diversity", rep.path_diversity},
           {"majority_paths", rep.majority_path},
           {"vitality", std::move(vit)},
           {"per_sample_delta", rep.per_sample_delta},
           {"novel_count", rep.novel_count}};
    return j.dump(2) + "\n";
}

std::string train_log_csv(const std::vector<EpochLog>& logs, int num_layers) {
    std::ostringstream out;
    out << "epoch,task,spec,rank,div,total,val_accuracy";
    for (int l = 0; l < num_layers; ++l) out << ",sigma_" << l;
    for (int l = 0; l < num_layers; ++l) out << ",stable_rank_" << l;
    out << "\n";
    for (const EpochLog& log : logs) {
        out << log.epoch << ',' << fmt(log.loss.task) << ',' << fmt(log.loss.spec) << ','
            << fmt(log.loss.rank) << ',' << fmt(log.loss.div) << ',' << fmt(log.loss.total)
            << ',' << fmt(log.val_accuracy);
        for (double s : log.sigma) out << ',' << fmt(s);
        for (double r : log.srank) out << ',' << fmt(r);
        out << "\n";
    }
    return out.str();
}

std::string class_deltas_csv(const InterferenceReport& rep) {
    std::ostringstream out;
    out << "class,delta\n";
    for (std::size_t c = 0; c < rep.class_delta.size(); ++c) {
        out << c << ',' << fmt(rep.class_delta[c]) << "\n";
    }
    return out.str();
}

std::string utilization_csv(const Utilization& u) {
    std::ostringstream out;
    out << "class,layer,expert,count\n";
    for (int c = 0; c < u.classes; ++c) {
        for (int l = 0; l < u.layers; ++l) {
            for (int e = 0; e < u.experts; ++e) {
                out << c << ',' << l << ',' << e << ',' << u.at(c, l, e) << "\n";
            }
        }
    }
    return out.str();
}

std::string vitality_csv(const Mat& vitality) {
    std::ostringstream out;
    out << "layer,expert,grad_norm\n";
    for (int l = 0; l < vitality.rows; ++l) {
        for (int e = 0; e < vitality.cols; ++e) {
            out << l << ',' << e << ',' << fmt(vitality.at(l, e)) << "\n";
        }
    }
    return out.str();
}

ReportSummary parse_report_json(const std::string& text, const std::string& run_name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("report: JSON parse failure in " + run_name + ": " + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != 1) {
            throw DataError("report: unsupported schema_version in " + run_name);
        }
        ReportSummary s;
        s.run_name = run_name;
        s.mode = j.at("mode").get<std::string>();
        s.pre_accuracy = j.at("pre_accuracy").get<double>();
        s.mean_delta = j.at("mean_delta").get<double>();
        s.path_diversity = j.at("path_diversity").get<int>();
        s.class_delta = j.at("class_delta").get<std::vector<double>>();
        return s;
    } catch (const json::exception& e) {
        throw DataError("report: missing or mistyped field in " + run_name + ": " + e.what());
    }
}

std::string comparison_csv(const std::vector<ReportSummary>& runs) {
    std::ostringstream out;
    out << "metric";
    for (const ReportSummary& r : runs) out << ',' << r.run_name;
    out << "\nmode";
    for (const ReportSummary& r : runs) out << ',' << r.mode;
    out << "\npre_accuracy";
    for (const ReportSummary& r : runs) out << ',' << fmt(r.pre_accuracy);
    out << "\nmean_delta";
    for (const ReportSummary& r : runs) out << ',' << fmt(r.mean_delta);
    out << "\npath_diversity";
    for (const ReportSummary& r : runs) out << ',' << r.path_diversity;
    std::size_t classes = 0;
    for (const ReportSummary& r : runs) classes = std::max(classes, r.class_delta.size());
    for (std::size_t c = 0; c < classes; ++c) {
        out << "\nclass_" << c << "_delta";
        for (const ReportSummary& r : runs) {
            out << ',';
            if (c < r.class_delta.size()) out << fmt(r.class_delta[c]);
        }
    }
    out << "\n";
    return out.str();
}

std::string comparison_text(const std::vector<ReportSummary>& runs) {
    std::ostringstream out;
    auto row = [&out, &runs](const std::string& label, auto getter) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-18s", label.c_str());
        out << buf;
        for (const ReportSummary& r : runs) {
            std::snprintf(buf, sizeof(buf), " %14s", getter(r).c_str());
            out << buf;
        }
        out << "\n";
    };
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%+.4f", v);
        return std::string(buf);
    };
    row("run", [](const ReportSummary& r) { return r.run_name; });
    row("mode", [](const ReportSummary& r) { return r.mode; });
    row("pre_accuracy", [&num](const ReportSummary& r) { return num(r.pre_accuracy); });
    row("mean_delta", [&num](const ReportSummary& r) { return num(r.mean_delta); });
    row("path_diversity", [](const ReportSummary& r) { return std::to_string(r.path_diversity); });
    std::size_t classes = 0;
    for (const ReportSummary& r : runs) classes = std::max(classes, r.class_delta.size());
    for (std::size_t c = 0; c < classes; ++c) {
        row("class_" + std::to_string(c) + "_delta", [&num, c](const ReportSummary& r) {
            return c < r.class_delta.size() ? num(r.class_delta[c]) : std::string("-");
        });
    }
    return out.str();
}

}  // namespace srmoe
