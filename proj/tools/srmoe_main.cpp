// Command-line front end for the mixture-of-experts workbench.
//
// Subcommands:
//   gen-data  synthesize a dataset and write train/val/test/novel splits
//   train     train a model on a generated dataset and save the best checkpoint
//   oneshot   run the single-sample adaptation experiment against a checkpoint
//   report    consolidate several oneshot reports into one comparison table
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srmoe/commands.hpp"
#include "srmoe/config.hpp"
#include "srmoe/errors.hpp"

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw srmoe::DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Shared flags. The config file provides the base settings; explicitly passed
// flags win over the file so the three routing arms can be scripted from one
// config.
struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    std::string mode;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* mode_opt = nullptr;

    void attach(CLI::App* cmd, bool with_mode) {
        cmd->add_option("--config", config_path, "JSON run configuration file");
        seed_opt = cmd->add_option("--seed", seed, "root random seed (overrides config)");
        out_opt = cmd->add_option("--out", out, "output directory (overrides config)");
        if (with_mode) {
            mode_opt = cmd->add_option(
                "--mode", mode, "routing mode: baseline|clustering|spectral (overrides config)");
        }
    }

    srmoe::RunConfig resolve() const {
        srmoe::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = srmoe::run_config_from_json(read_text_file(config_path));
        }
        if (seed_opt != nullptr && seed_opt->count() > 0) cfg.seed = seed;
        if (out_opt != nullptr && out_opt->count() > 0) cfg.out_dir = out;
        if (mode_opt != nullptr && mode_opt->count() > 0) {
            cfg.model.mode = srmoe::routing_mode_from_string(mode);
        }
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture-of-experts workbench: data synthesis, training, and "
                 "single-sample adaptation experiments"};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    CommonOpts gen_opts;
    gen_opts.attach(gen, /*with_mode=*/false);

    CLI::App* train = app.add_subcommand("train", "Train a model and save the best checkpoint");
    CommonOpts train_opts;
    train_opts.attach(train, /*with_mode=*/true);
    std::string train_data;
    train->add_option("--data", train_data,
                      "directory holding the dataset splits (default: the output directory)");

    CLI::App* oneshot =
        app.add_subcommand("oneshot", "Run the single-sample adaptation experiment");
    CommonOpts oneshot_opts;
    oneshot_opts.attach(oneshot, /*with_mode=*/false);
    std::string oneshot_data;
    oneshot->add_option("--data", oneshot_data,
                        "directory holding the dataset splits (default: the output directory)");
    std::string checkpoint_path;
    oneshot->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
    bool hard_routing = false;
    oneshot->add_flag("--hard-routing", hard_routing,
                      "route each sample through only its strongest expert per layer");

    CLI::App* report = app.add_subcommand("report", "Consolidate oneshot reports");
    std::vector<std::string> run_dirs;
    report->add_option("runs", run_dirs, "run directories containing report.json")->required();
    std::string report_out = "report";
    report->add_option("--out", report_out, "output directory for the comparison table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(gen)) {
            srmoe::cmd_gen_data(gen_opts.resolve());
        } else if (app.got_subcommand(train)) {
            const srmoe::RunConfig cfg = train_opts.resolve();
            const std::string data_dir = train_data.empty() ? cfg.out_dir : train_data;
            srmoe::cmd_train(cfg, data_dir);
        } else if (app.got_subcommand(oneshot)) {
            srmoe::RunConfig cfg = oneshot_opts.resolve();
            if (hard_routing) cfg.model.hard_routing = true;
            const std::string data_dir = oneshot_data.empty() ? cfg.out_dir : oneshot_data;
            srmoe::cmd_oneshot(cfg, data_dir, checkpoint_path);
        } else if (app.got_subcommand(report)) {
            srmoe::cmd_report(run_dirs, report_out);
        }
    } catch (const srmoe::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const srmoe::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const srmoe::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
