#include "srmoe/config.hpp"

#include <initializer_list>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "srmoe/errors.hpp"

namespace srmoe {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(lr >= 0.0)) throw std::invalid_argument("train: lr must be non-negative");
}

void OneshotConfig::validate() const {
    if (!(lr >= 0.0)) throw std::invalid_argument("oneshot: lr must be non-negative");
    if (steps < 1) throw std::invalid_argument("oneshot: steps must be >= 1");
    if (anchor_size < 0) throw std::invalid_argument("oneshot: anchor_size must be >= 0");
}

void RunConfig::validate() const {
    model.validate();
    data.validate();
    train.validate();
    oneshot.validate();
    if (model.num_classes != data.classes) {
        throw std::invalid_argument("config: model num_classes must match data classes");
    }
    if (model.stem.in_channels != data.channels || model.stem.height != data.height ||
        model.stem.width != data.width) {
        throw std::invalid_argument("config: stem input shape must match data shape");
    }
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must not be empty");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* ctx) {
    if (!j.is_object()) throw UsageError(std::string("config: ") + ctx + " must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw UsageError(std::string("config: unknown key \"") + item.key() + "\" in " + ctx);
        }
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError(std::string("config: bad value type for \"") + key + "\"");
        }
    }
}

json stem_to_json(const StemConfig& s) {
    return json{{"in_channels", s.in_channels}, {"height", s.height},
                {"width", s.width},             {"conv1_channels", s.conv1_channels},
                {"conv2_channels", s.conv2_channels}, {"kernel", s.kernel},
                {"pool", s.pool},               {"out_grid", s.out_grid},
                {"embed_dim", s.embed_dim}};
}

StemConfig stem_from_json(const json& j) {
    check_keys(j, {"in_channels", "height", "width", "conv1_channels", "conv2_channels",
                   "kernel", "pool", "out_grid", "embed_dim"}, "stem");
    StemConfig s;
    get_if(j, "in_channels", s.in_channels);
    get_if(j, "height", s.height);
    get_if(j, "width", s.width);
    get_if(j, "conv1_channels", s.conv1_channels);
    get_if(j, "conv2_channels", s.conv2_channels);
    get_if(j, "kernel", s.kernel);
    get_if(j, "pool", s.pool);
    get_if(j, "out_grid", s.out_grid);
    get_if(j, "embed_dim", s.embed_dim);
    return s;
}

json model_to_json(const ModelConfig& m) {
    return json{{"stem", stem_to_json(m.stem)},
                {"embed_dim", m.embed_dim},
                {"hidden_dim", m.hidden_dim},
                {"num_layers", m.num_layers},
                {"num_experts", m.num_experts},
                {"num_classes", m.num_classes},
                {"mode", to_string(m.mode)},
                {"tau", m.tau},
                {"alpha", m.alpha},
                {"beta", m.beta},
                {"sigma_target", m.sigma_target},
                {"rho_target", m.rho_target},
                {"ln_eps", m.ln_eps},
                {"gate_init_scale", m.gate_init_scale},
                {"expert_init_scale", m.expert_init_scale},
                {"force_spectral_penalties", m.force_spectral_penalties},
                {"hard_routing", m.hard_routing},
                {"power_iters", m.power_iters},
                {"power_tol", m.power_tol}};
}

ModelConfig model_from_json(const json& j) {
    check_keys(j, {"stem", "embed_dim", "hidden_dim", "num_layers", "num_experts",
                   "num_classes", "mode", "tau", "alpha", "beta", "sigma_target",
                   "rho_target", "ln_eps", "gate_init_scale", "expert_init_scale",
                   "force_spectral_penalties", "hard_routing", "power_iters", "power_tol"},
               "model");
    ModelConfig m;
    if (j.contains("stem")) m.stem = stem_from_json(j.at("stem"));
    get_if(j, "embed_dim", m.embed_dim);
    get_if(j, "hidden_dim", m.hidden_dim);
    get_if(j, "num_layers", m.num_layers);
    get_if(j, "num_experts", m.num_experts);
    get_if(j, "num_classes", m.num_classes);
    if (j.contains("mode")) {
        std::string s;
        get_if(j, "mode", s);
        try {
            m.mode = routing_mode_from_string(s);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    get_if(j, "tau", m.tau);
    get_if(j, "alpha", m.alpha);
    get_if(j, "beta", m.beta);
    get_if(j, "sigma_target", m.sigma_target);
    get_if(j, "rho_target", m.rho_target);
    get_if(j, "ln_eps", m.ln_eps);
    get_if(j, "gate_init_scale", m.gate_init_scale);
    get_if(j, "expert_init_scale", m.expert_init_scale);
    get_if(j, "force_spectral_penalties", m.force_spectral_penalties);
    get_if(j, "hard_routing", m.hard_routing);
    get_if(j, "power_iters", m.power_iters);
    get_if(j, "power_tol", m.power_tol);
    return m;
}

json data_to_json(const DataConfig& d) {
    return json{{"classes", d.classes},
                {"per_class", d.per_class},
                {"channels", d.channels},
                {"height", d.height},
                {"width", d.width},
                {"noise", d.noise},
                {"contrast_flip", d.contrast_flip},
                {"novel_per_class", d.novel_per_class},
                {"train_ratio", d.train_ratio},
                {"val_ratio", d.val_ratio},
                {"test_ratio", d.test_ratio}};
}

DataConfig data_from_json(const json& j) {
    check_keys(j, {"classes", "per_class", "channels", "height", "width", "noise",
                   "contrast_flip", "novel_per_class", "train_ratio", "val_ratio",
                   "test_ratio"}, "data");
    DataConfig d;
    get_if(j, "classes", d.classes);
    get_if(j, "per_class", d.per_class);
    get_if(j, "channels", d.channels);
    get_if(j, "height", d.height);
    get_if(j, "width", d.width);
    get_if(j, "noise", d.noise);
    get_if(j, "contrast_flip", d.contrast_flip);
    get_if(j, "novel_per_class", d.novel_per_class);
    get_if(j, "train_ratio", d.train_ratio);
    get_if(j, "val_ratio", d.val_ratio);
    get_if(j, "test_ratio", d.test_ratio);
    return d;
}

json train_to_json(const TrainConfig& t) {
    return json{{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr}};
}

TrainConfig train_from_json(const json& j) {
    check_keys(j, {"epochs", "batch_size", "lr"}, "train");
    TrainConfig t;
    get_if(j, "epochs", t.epochs);
    get_if(j, "batch_size", t.batch_size);
    get_if(j, "lr", t.lr);
    return t;
}

json oneshot_to_json(const OneshotConfig& o) {
    return json{{"lr", o.lr},
                {"steps", o.steps},
                {"anchor_size", o.anchor_size},
                {"update_head", o.update_head}};
}

OneshotConfig oneshot_from_json(const json& j) {
    check_keys(j, {"lr", "steps", "anchor_size", "update_head"}, "oneshot");
    OneshotConfig o;
    get_if(j, "lr", o.lr);
    get_if(j, "steps", o.steps);
    get_if(j, "anchor_size", o.anchor_size);
    get_if(j, "update_head", o.update_head);
    return o;
}

}  // namespace

std::string to_json_string(const RunConfig& cfg) {
    json j{{"model", model_to_json(cfg.model)},
           {"data", data_to_json(cfg.data)},
           {"train", train_to_json(cfg.train)},
           {"oneshot", oneshot_to_json(cfg.oneshot)},
           {"seed", cfg.seed},
           {"out_dir", cfg.out_dir}};
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: JSON parse failure: ") + e.what());
    }
    check_keys(j, {"model", "data", "train", "oneshot", "seed", "out_dir"}, "run config");
    RunConfig cfg;
    if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
    if (j.contains("data")) cfg.data = data_from_json(j.at("data"));
    if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
    if (j.contains("oneshot")) cfg.oneshot = oneshot_from_json(j.at("oneshot"));
    get_if(j, "seed", cfg.seed);
    get_if(j, "out_dir", cfg.out_dir);
    return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
    return model_to_json(cfg).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model config: JSON parse failure: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace srmoe
