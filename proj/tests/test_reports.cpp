#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "srmoe/adaptation.hpp"
#include "srmoe/errors.hpp"
#include "srmoe/mat.hpp"
#include "srmoe/reports.hpp"

using srmoe::InterferenceReport;
using srmoe::Mat;
using srmoe::OneshotConfig;
using srmoe::ReportSummary;
using srmoe::Utilization;

namespace {
InterferenceReport sample_report() {
    InterferenceReport rep;
    rep.pre_accuracy = 0.875;
    rep.class_delta = {-0.01, 0.0, 0.02, -0.05};
    rep.mean_delta = (-0.01 + 0.0 + 0.02 - 0.05) / 4.0;
    rep.path_diversity = 3;
    rep.majority_path = {{0, 1}, {0, 1}, {2, 1}, {3, 0}};
    rep.vitality = Mat::from(2, 2, {0.5, 0.001, 0.75, 0.002});
    rep.per_sample_delta = {-0.01, 0.02};
    rep.novel_count = 2;
    return rep;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}
}  // namespace

TEST_CASE("interference report JSON round-trips through the parser") {
    const InterferenceReport rep = sample_report();
    OneshotConfig cfg;
    cfg.lr = 0.25;
    const std::string text = srmoe::interference_report_json(rep, "spectral", cfg, 99);

    const ReportSummary s = srmoe::parse_report_json(text, "runA");
    CHECK(s.run_name == "runA");
    CHECK(s.mode == "spectral");
    CHECK(s.pre_accuracy == rep.pre_accuracy);
    CHECK(s.mean_delta == rep.mean_delta);
    CHECK(s.path_diversity == 3);
    REQUIRE(s.class_delta.size() == 4);
    CHECK(s.class_delta[3] == -0.05);

    // Schema version and seed are embedded.
    CHECK(text.find("schema_version") != std::string::npos);
    CHECK(text.find("99") != std::string::npos);
}

TEST_CASE("report JSON bytes are deterministic") {
    const InterferenceReport rep = sample_report();
    OneshotConfig cfg;
    CHECK(srmoe::interference_report_json(rep, "baseline", cfg, 7) ==
          srmoe::interference_report_json(rep, "baseline", cfg, 7));
}

TEST_CASE("malformed report JSON raises a data error") {
    CHECK_THROWS_AS(srmoe::parse_report_json("{ nope", "x"), srmoe::DataError);
    CHECK_THROWS_AS(srmoe::parse_report_json(R"({ "schema_version": 999 })", "x"),
                    srmoe::DataError);
}

TEST_CASE("train log CSV has one row per epoch and per-layer columns") {
    std::vector<srmoe::EpochLog> logs(3);
    for (int i = 0; i < 3; ++i) {
        logs[static_cast<std::size_t>(i)].epoch = i + 1;
        logs[static_cast<std::size_t>(i)].loss.task = 1.0 / (i + 1);
        logs[static_cast<std::size_t>(i)].loss.total = 1.5 / (i + 1);
        logs[static_cast<std::size_t>(i)].val_accuracy = 0.25 * (i + 1);
        logs[static_cast<std::size_t>(i)].sigma = {1.5, 2.5};
        logs[static_cast<std::size_t>(i)].srank = {3.0, 4.0};
    }
    const std::string csv = srmoe::train_log_csv(logs, 2);
    CHECK(count_lines(csv) == 4);  // header + 3 epochs

    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "epoch,task,spec,rank,div,total,val_accuracy,sigma_0,sigma_1,stable_rank_0,stable_rank_1");
    std::string row;
    std::getline(in, row);
    CHECK(row.substr(0, 2) == "1,");
    CHECK(row.find("1.5") != std::string::npos);
}

TEST_CASE("class deltas CSV lists one row per class") {
    const std::string csv = srmoe::class_deltas_csv(sample_report());
    CHECK(count_lines(csv) == 5);
    CHECK(csv.rfind("class,delta\n", 0) == 0);
    CHECK(csv.find("3,-0.05") != std::string::npos);
}

TEST_CASE("utilization CSV covers the full class x layer x expert grid") {
    Utilization u;
    u.classes = 2;
    u.layers = 2;
    u.experts = 3;
    u.counts.assign(2 * 2 * 3, 0);
    u.at(0, 0, 1) = 17;
    u.at(1, 1, 2) = 4;
    const std::string csv = srmoe::utilization_csv(u);
    CHECK(count_lines(csv) == 1 + 2 * 2 * 3);
    CHECK(csv.rfind("class,layer,expert,count\n", 0) == 0);
    CHECK(csv.find("0,0,1,17") != std::string::npos);
    CHECK(csv.find("1,1,2,4") != std::string::npos);
}

TEST_CASE("vitality CSV flattens the layer x expert matrix") {
    const std::string csv = srmoe::vitality_csv(Mat::from(2, 2, {0.5, 0.001, 0.75, 0.002}));
    CHECK(count_lines(csv) == 5);
    CHECK(csv.rfind("layer,expert,grad_norm\n", 0) == 0);
    CHECK(csv.find("1,0,0.75") != std::string::npos);
}

TEST_CASE("comparison outputs place runs side by side in input order") {
    ReportSummary a;
    a.run_name = "baseline-run";
    a.mode = "baseline";
    a.pre_accuracy = 0.875;
    a.mean_delta = -0.046875;
    a.path_diversity = 1;
    a.class_delta = {-0.1, -0.02, -0.05, -0.018};
    ReportSummary b;
    b.run_name = "spectral-run";
    b.mode = "spectral";
    b.pre_accuracy = 0.90625;
    b.mean_delta = -0.015625;
    b.path_diversity = 4;
    b.class_delta = {-0.01, 0.0, -0.002, 0.0};

    const std::string csv = srmoe::comparison_csv({a, b});
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "metric,baseline-run,spectral-run");
    CHECK(csv.find("mean_delta,-0.046875,-0.015625") != std::string::npos);
    CHECK(csv.find("path_diversity,1,4") != std::string::npos);
    CHECK(csv.find("pre_accuracy,0.875,0.90625") != std::string::npos);

    const std::string text = srmoe::comparison_text({a, b});
    CHECK(text.find("baseline-run") != std::string::npos);
    CHECK(text.find("spectral-run") != std::string::npos);
    CHECK(text.find("mean_delta") != std::string::npos);
    // Per-class rows appear too.
    CHECK(text.find("class_0_delta") != std::string::npos);

    // Deterministic bytes.
    CHECK(srmoe::comparison_csv({a, b}) == csv);
    CHECK(srmoe::comparison_text({a, b}) == text);
}

TEST_CASE("comparison tolerates runs with differing class counts") {
    ReportSummary a;
    a.run_name = "two";
    a.mode = "baseline";
    a.class_delta = {-0.1, -0.2};
    ReportSummary b;
    b.run_name = "four";
    b.mode = "spectral";
    b.class_delta = {0.0, 0.0, 0.0, -0.1};
    const std::string csv = srmoe::comparison_csv({a, b});
    CHECK(count_lines(csv) >= 4);
}
