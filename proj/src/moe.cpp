#include "srmoe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srmoe/linalg.hpp"
#include "srmoe/ops.hpp"

namespace srmoe {

std::string to_string(RoutingMode mode) {
    switch (mode) {
        case RoutingMode::Baseline: return "baseline";
        case RoutingMode::Clustering: return "clustering";
        case RoutingMode::Spectral: return "spectral";
    }
    throw std::logic_error("to_string: unknown routing mode");
}

RoutingMode routing_mode_from_string(const std::string& s) {
    if (s == "baseline") return RoutingMode::Baseline;
    if (s == "clustering") return RoutingMode::Clustering;
    if (s == "spectral") return RoutingMode::Spectral;
    throw std::invalid_argument("unknown routing mode: " + s);
}

void ModelConfig::validate() const {
    if (stem.embed_dim != embed_dim) {
        throw std::invalid_argument("config: stem embed_dim must match the model embed_dim");
    }
    if (stem.in_channels < 1 || stem.height < 1 || stem.width < 1) {
        throw std::invalid_argument("config: image dims must be positive");
    }
    if (embed_dim < 2) throw std::invalid_argument("config: embed_dim must be >= 2");
    if (hidden_dim < 1) throw std::invalid_argument("config: hidden_dim must be >= 1");
    if (num_layers < 1) throw std::invalid_argument("config: num_layers must be >= 1");
    if (num_experts < 1) throw std::invalid_argument("config: num_experts must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("config: num_classes must be >= 2");
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
    if (alpha < 0.0 || beta < 0.0) {
        throw std::invalid_argument("config: penalty weights must be non-negative");
    }
    if (!(sigma_target > 0.0)) throw std::invalid_argument("config: sigma_target must be positive");
    if (!(ln_eps > 0.0)) throw std::invalid_argument("config: ln_eps must be positive");
    if (!(gate_init_scale > 0.0)) {
        throw std::invalid_argument("config: gate_init_scale must be positive");
    }
    if (!(expert_init_scale > 0.0)) {
        throw std::invalid_argument("config: expert_init_scale must be positive");
    }
    if (power_iters < 1) throw std::invalid_argument("config: power_iters must be >= 1");
    if (!(power_tol > 0.0)) throw std::invalid_argument("config: power_tol must be positive");
}

double ModelConfig::resolved_rho_target() const {
    return rho_target > 0.0 ? rho_target : embed_dim / 2.0;
}

namespace {

// Rank target for an actual penalized matrix (the gate is not square).
double rho_for(const ModelConfig& cfg, const Mat& w) {
    if (cfg.rho_target > 0.0) return cfg.rho_target;
    return std::min(w.rows, w.cols) / 2.0;
}

}  // namespace

void ExpertParams::visit(const std::function<void(Param&)>& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
}

void MoELayer::visit(const std::function<void(Param&)>& f) {
    f(proc_w);
    f(proc_b);
    f(ln_gain);
    f(ln_shift);
    if (!prototypes.value.empty()) f(prototypes);
    if (has_gate) f(gate);
    for (ExpertParams& e : experts) e.visit(f);
}

SrMoeModel SrMoeModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SrMoeModel m;
    m.cfg = cfg;
    Rng rng(seed);

    m.stem = StemParams::init(cfg.stem, rng);

    const int d = cfg.embed_dim;
    const int h = cfg.hidden_dim;
    const int K = cfg.num_experts;
    const double proc_sd = std::sqrt(2.0 / d);
    const double e1_sd = cfg.expert_init_scale * std::sqrt(2.0 / d);
    const double e2_sd = cfg.expert_init_scale * std::sqrt(2.0 / h);

    m.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (int l = 0; l < cfg.num_layers; ++l) {
        MoELayer& layer = m.layers[static_cast<std::size_t>(l)];
        const std::string pre = "layer" + std::to_string(l) + ".";
        layer.proc_w = Param(pre + "proc.w", random_normal(d, d, proc_sd, rng));
        layer.proc_b = Param(pre + "proc.b", Mat(1, d));
        Mat ones(1, d);
        ones.fill(1.0);
        layer.ln_gain = Param(pre + "ln.gain", ones);
        layer.ln_shift = Param(pre + "ln.shift", Mat(1, d));

        if (cfg.uses_prototypes()) {
            // Unit-norm rows: a symmetric start that gives no expert an
            // initial distance advantage in expectation.
            Mat protos = random_normal(K, d, 1.0, rng);
            for (int k = 0; k < K; ++k) {
                double n2 = 0.0;
                double* row = protos.row(k);
                for (int j = 0; j < d; ++j) n2 += row[j] * row[j];
                const double n = std::sqrt(n2);
                if (n > 0.0) {
                    for (int j = 0; j < d; ++j) row[j] /= n;
                }
            }
            layer.prototypes = Param(pre + "protos", std::move(protos));
        } else {
            layer.gate = Param(pre + "gate",
                               random_normal(d, K, cfg.gate_init_scale / std::sqrt(d), rng));
            layer.has_gate = true;
        }

        layer.experts.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            ExpertParams& e = layer.experts[static_cast<std::size_t>(k)];
            const std::string ep = pre + "expert" + std::to_string(k) + ".";
            e.w1 = Param(ep + "w1", random_normal(d, h, e1_sd, rng));
            e.b1 = Param(ep + "b1", Mat(1, h));
            e.w2 = Param(ep + "w2", random_normal(h, d, e2_sd, rng));
            e.b2 = Param(ep + "b2", Mat(1, d));
        }
    }

    m.head_w = Param("head.w", random_normal(d, cfg.num_classes, std::sqrt(1.0 / d), rng));
    m.head_b = Param("head.b", Mat(1, cfg.num_classes));
    return m;
}

void SrMoeModel::visit_params(const std::function<void(Param&)>& f) {
    stem.visit(f);
    for (MoELayer& layer : layers) layer.visit(f);
    f(head_w);
    f(head_b);
}

void SrMoeModel::visit_expert_params(int layer, int expert,
                                     const std::function<void(Param&)>& f) {
    if (layer < 0 || layer >= static_cast<int>(layers.size())) {
        throw std::invalid_argument("visit_expert_params: layer out of range");
    }
    MoELayer& L = layers[static_cast<std::size_t>(layer)];
    if (expert < 0 || expert >= static_cast<int>(L.experts.size())) {
        throw std::invalid_argument("visit_expert_params: expert out of range");
    }
    L.experts[static_cast<std::size_t>(expert)].visit(f);
}

Param& SrMoeModel::penalized_weight(int layer) {
    if (layer < 0 || layer >= static_cast<int>(layers.size())) {
        throw std::invalid_argument("penalized_weight: layer out of range");
    }
    MoELayer& L = layers[static_cast<std::size_t>(layer)];
    return L.has_gate ? L.gate : L.proc_w;
}

void SrMoeModel::zero_grads() {
    visit_params([](Param& p) { p.zero_grad(); });
}

int SrMoeModel::num_params() const {
    int n = 0;
    const_cast<SrMoeModel*>(this)->visit_params(
        [&n](Param& p) { n += static_cast<int>(p.value.size()); });
    return n;
}

NodeId route_op(Tape& t, MoELayer& layer, NodeId z_prime, const ModelConfig& cfg) {
    NodeId w;
    if (cfg.uses_prototypes()) {
        const NodeId protos = t.leaf(layer.prototypes);
        const NodeId dist = ops::proto_distances(t, z_prime, protos);
        w = ops::softmax_rows(t, ops::scale(t, dist, -1.0 / cfg.tau));
    } else {
        const NodeId gate = t.leaf(layer.gate);
        w = ops::softmax_rows(t, ops::matmul(t, z_prime, gate));
    }
    if (cfg.hard_routing) w = ops::hard_top1(t, w);
    return w;
}

Mat route(MoELayer& layer, const Mat& z_prime, const ModelConfig& cfg) {
    Tape t;
    const NodeId z = t.constant(z_prime);
    const NodeId w = route_op(t, layer, z, cfg);
    return t.value(w);
}

LayerForwardNodes moe_layer_forward_op(Tape& t, MoELayer& layer, NodeId z_in,
                                       const ModelConfig& cfg) {
    const NodeId pw = t.leaf(layer.proc_w);
    const NodeId pb = t.leaf(layer.proc_b);
    const NodeId gain = t.leaf(layer.ln_gain);
    const NodeId shift = t.leaf(layer.ln_shift);

    NodeId z = ops::linear(t, z_in, pw, pb);
    z = ops::relu(t, z);
    const NodeId z_prime = ops::layer_norm(t, z, gain, shift, cfg.ln_eps);

    const NodeId w = route_op(t, layer, z_prime, cfg);

    std::vector<NodeId> outs;
    outs.reserve(layer.experts.size());
    for (ExpertParams& e : layer.experts) {
        const NodeId w1 = t.leaf(e.w1);
        const NodeId b1 = t.leaf(e.b1);
        const NodeId w2 = t.leaf(e.w2);
        const NodeId b2 = t.leaf(e.b2);
        NodeId hzn = ops::linear(t, z_prime, w1, b1);
        hzn = ops::relu(t, hzn);
        outs.push_back(ops::linear(t, hzn, w2, b2));
    }

    return LayerForwardNodes{ops::weighted_sum(t, w, outs), w};
}

RoutingRecord make_record(const Tape& t, NodeId routing) {
    const Mat& w = t.value(routing);
    RoutingRecord rec;
    rec.weights = w;
    rec.top.resize(static_cast<std::size_t>(w.rows));
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        int best = 0;
        for (int c = 1; c < w.cols; ++c) {
            if (wr[c] > wr[best]) best = c;
        }
        rec.top[static_cast<std::size_t>(r)] = best;
    }
    return rec;
}

std::pair<Mat, RoutingRecord> moe_layer_forward(MoELayer& layer, const Mat& z_in,
                                                const ModelConfig& cfg) {
    Tape t;
    const NodeId z = t.constant(z_in);
    const LayerForwardNodes fwd = moe_layer_forward_op(t, layer, z, cfg);
    return {t.value(fwd.z_out), make_record(t, fwd.routing)};
}

ModelForwardNodes model_forward_op(Tape& t, SrMoeModel& m, const Mat& images) {
    const NodeId x = t.constant(images);
    NodeId z = stem_forward(t, m.cfg.stem, m.stem, x);

    ModelForwardNodes out;
    out.routing.reserve(m.layers.size());
    out.records.reserve(m.layers.size());
    for (MoELayer& layer : m.layers) {
        const LayerForwardNodes fwd = moe_layer_forward_op(t, layer, z, m.cfg);
        z = fwd.z_out;
        out.routing.push_back(fwd.routing);
        out.records.push_back(make_record(t, fwd.routing));
    }

    const NodeId hw = t.leaf(m.head_w);
    const NodeId hb = t.leaf(m.head_b);
    out.logits = ops::linear(t, z, hw, hb);
    return out;
}

std::pair<Mat, std::vector<RoutingRecord>> model_forward(SrMoeModel& m, const Mat& images) {
    Tape t;
    ModelForwardNodes fwd = model_forward_op(t, m, images);
    return {t.value(fwd.logits), std::move(fwd.records)};
}

TotalLossNodes total_loss_op(Tape& t, SrMoeModel& m, const Mat& images,
                             const std::vector<int>& labels) {
    ModelForwardNodes fwd = model_forward_op(t, m, images);
    const NodeId task = ops::softmax_cross_entropy(t, fwd.logits, labels);

    std::vector<NodeId> div_terms;
    div_terms.reserve(fwd.routing.size());
    for (NodeId w : fwd.routing) div_terms.push_back(diversity_loss_op(t, w));
    const NodeId div_mean = ops::mean_scalars(t, div_terms);

    TotalLossNodes out;
    out.records = std::move(fwd.records);
    out.breakdown.task = t.value(task).at(0, 0);
    out.breakdown.div = t.value(div_mean).at(0, 0);

    NodeId total = ops::add(t, task, ops::scale(t, div_mean, m.cfg.beta));

    if (m.cfg.spectral_penalties_active()) {
        NodeId spec_sum = -1;
        NodeId rank_sum = -1;
        for (int l = 0; l < static_cast<int>(m.layers.size()); ++l) {
            Param& wp = m.penalized_weight(l);
            const NodeId wn = t.leaf(wp);
            const NodeId sp = spec_norm_penalty_op(t, wn, m.cfg.sigma_target,
                                                   m.cfg.power_iters, m.cfg.power_tol);
            const NodeId rp = rank_penalty_op(t, wn, rho_for(m.cfg, wp.value),
                                              m.cfg.power_iters, m.cfg.power_tol);
            spec_sum = (spec_sum < 0) ? sp : ops::add(t, spec_sum, sp);
            rank_sum = (rank_sum < 0) ? rp : ops::add(t, rank_sum, rp);
        }
        out.breakdown.spec = t.value(spec_sum).at(0, 0);
        out.breakdown.rank = t.value(rank_sum).at(0, 0);
        total = ops::add(t, total, ops::scale(t, spec_sum, m.cfg.alpha));
        total = ops::add(t, total, ops::scale(t, rank_sum, m.cfg.alpha));
    }

    out.total = total;
    out.breakdown.total = t.value(total).at(0, 0);
    return out;
}

LossBreakdown total_loss(SrMoeModel& m, const Mat& images, const std::vector<int>& labels) {
    Tape t;
    return total_loss_op(t, m, images, labels).breakdown;
}

}  // namespace srmoe
