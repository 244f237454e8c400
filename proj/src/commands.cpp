#include "srmoe/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srmoe/adaptation.hpp"
#include "srmoe/checkpoint.hpp"
#include "srmoe/errors.hpp"
#include "srmoe/reports.hpp"
#include "srmoe/rng.hpp"
#include "srmoe/train.hpp"

namespace srmoe {

namespace fs = std::filesystem;

std::uint64_t split_seed(std::uint64_t root) { return derive_seed(root, 101); }
std::uint64_t model_seed(std::uint64_t root) { return derive_seed(root, 102); }
std::uint64_t train_seed(std::uint64_t root) { return derive_seed(root, 103); }
std::uint64_t anchor_seed(std::uint64_t root) { return derive_seed(root, 104); }

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw DataError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_resolved_config(const RunConfig& cfg) {
    write_text((fs::path(cfg.out_dir) / "config.resolved.json").string(), to_json_string(cfg));
}

Dataset load_split(const std::string& data_dir, const char* name) {
    const fs::path p = fs::path(data_dir) / (std::string(name) + ".srtd");
    if (!fs::exists(p)) {
        throw DataError("missing dataset file: " + p.string() +
                        " (run gen-data first, or pass --data)");
    }
    return load_tensor_file(p.string());
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
    cfg.validate();
    ensure_dir(cfg.out_dir);

    const Dataset all = generate_synthetic(cfg.data, cfg.seed);
    const Splits s = split(all, cfg.data.train_ratio, cfg.data.val_ratio, cfg.data.test_ratio,
                           cfg.data.novel_per_class, split_seed(cfg.seed));

    const fs::path out(cfg.out_dir);
    save_tensor_file(s.train, (out / "train.srtd").string());
    save_tensor_file(s.val, (out / "val.srtd").string());
    save_tensor_file(s.test, (out / "test.srtd").string());
    save_tensor_file(s.novel, (out / "novel.srtd").string());
    write_resolved_config(cfg);

    std::printf("wrote %d train / %d val / %d test / %d novel samples to %s\n",
                s.train.size(), s.val.size(), s.test.size(), s.novel.size(),
                cfg.out_dir.c_str());
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir) {
    cfg.validate();
    ensure_dir(cfg.out_dir);

    const Dataset train_set = load_split(data_dir, "train");
    const Dataset val_set = load_split(data_dir, "val");

    SrMoeModel model = SrMoeModel::init(cfg.model, model_seed(cfg.seed));
    const TrainResult res = train_model(model, train_set, val_set, cfg.train, train_seed(cfg.seed));

    for (const EpochLog& log : res.logs) {
        std::printf("epoch %d total %.6f task %.6f val_acc %.4f\n", log.epoch, log.loss.total,
                    log.loss.task, log.val_accuracy);
    }
    std::printf("best val accuracy %.4f at epoch %d (%s mode)\n", res.best_val_accuracy,
                res.best_epoch, to_string(cfg.model.mode).c_str());

    const fs::path out(cfg.out_dir);
    write_text((out / "checkpoint.srmo").string(),
               std::string(res.best_checkpoint.begin(), res.best_checkpoint.end()));
    write_text((out / "train_log.csv").string(), train_log_csv(res.logs, cfg.model.num_layers));
    write_resolved_config(cfg);
}

void cmd_oneshot(const RunConfig& cfg, const std::string& data_dir,
                 const std::string& checkpoint_path) {
    cfg.oneshot.validate();
    ensure_dir(cfg.out_dir);

    if (!fs::exists(checkpoint_path)) {
        throw DataError("missing checkpoint: " + checkpoint_path);
    }
    SrMoeModel model = load_checkpoint(checkpoint_path);
    model.cfg.hard_routing = cfg.model.hard_routing;

    const Dataset train_set = load_split(data_dir, "train");
    const Dataset test_set = load_split(data_dir, "test");
    const Dataset novel_set = load_split(data_dir, "novel");

    const InterferenceReport rep = interference_experiment(
        model, novel_set, test_set, train_set, cfg.oneshot, anchor_seed(cfg.seed));

    const std::string mode = to_string(model.cfg.mode);
    const fs::path out(cfg.out_dir);
    write_text((out / "report.json").string(),
               interference_report_json(rep, mode, cfg.oneshot, cfg.seed));
    write_text((out / "class_deltas.csv").string(), class_deltas_csv(rep));
    const Utilization util = path_utilization(model, test_set);
    write_text((out / "utilization.csv").string(), utilization_csv(util));
    write_text((out / "vitality.csv").string(), vitality_csv(rep.vitality));
    write_resolved_config(cfg);

    std::printf("%s: pre-accuracy %.4f, mean delta %+.4f, path diversity %d (%d novel trials)\n",
                mode.c_str(), rep.pre_accuracy, rep.mean_delta, rep.path_diversity,
                rep.novel_count);
}

void cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw UsageError("report: need at least one run directory");
    ensure_dir(out_dir);

    std::vector<ReportSummary> runs;
    for (const std::string& dir : run_dirs) {
        const fs::path p = fs::path(dir) / "report.json";
        if (!fs::exists(p)) throw DataError("missing report: " + p.string());
        std::string name = fs::path(dir).filename().string();
        if (name.empty()) name = dir;
        runs.push_back(parse_report_json(read_text(p.string()), name));
    }

    const std::string text = comparison_text(runs);
    write_text((fs::path(out_dir) / "comparison.csv").string(), comparison_csv(runs));
    write_text((fs::path(out_dir) / "comparison.txt").string(), text);
    std::fputs(text.c_str(), stdout);
}

}  // namespace srmoe
