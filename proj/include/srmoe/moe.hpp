#pragma once

// The routed layer stack. Each layer runs a local processor
// (linear -> ReLU -> LayerNorm), computes per-expert mixture weights in one
// of three routing modes, and outputs the dense weighted sum of all expert
// MLPs. The model wraps a conv stem below and a linear classifier above.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "srmoe/losses.hpp"
#include "srmoe/stem.hpp"

namespace srmoe {

enum class RoutingMode {
    Baseline,    // learned linear gate, dot-product logits
    Clustering,  // prototype distances, no spectral penalties
    Spectral,    // prototype distances plus spectral penalties
};

std::string to_string(RoutingMode mode);
RoutingMode routing_mode_from_string(const std::string& s);

struct ModelConfig {
    StemConfig stem;
    int embed_dim = 32;    // width the routed layers operate in
    int hidden_dim = 64;   // expert MLP hidden width
    int num_layers = 4;
    int num_experts = 4;
    int num_classes = 4;
    RoutingMode mode = RoutingMode::Spectral;
    double tau = 1.0;            // routing temperature (prototype modes)
    double alpha = 0.01;         // weight of the spectral + rank penalties
    double beta = 0.01;          // weight of the usage-diversity penalty
    double sigma_target = 1.0;
    double rho_target = 0.0;     // <= 0 resolves to embed_dim / 2
    double ln_eps = 1e-5;
    double gate_init_scale = 1.0;    // multiplies the gate init std (baseline)
    double expert_init_scale = 1.0;  // multiplies the expert MLP init std
    bool force_spectral_penalties = false;  // apply them outside Spectral mode too
    bool hard_routing = false;   // one-hot top-1 mixture, no routing gradient
    int power_iters = 100;
    double power_tol = 1e-9;

    void validate() const;  // throws std::invalid_argument on a bad field
    double resolved_rho_target() const;
    bool spectral_penalties_active() const {
        return mode == RoutingMode::Spectral || force_spectral_penalties;
    }
    bool uses_prototypes() const { return mode != RoutingMode::Baseline; }
};

struct ExpertParams {
    Param w1, b1, w2, b2;
    void visit(const std::function<void(Param&)>& f);
};

struct MoELayer {
    Param proc_w, proc_b;     // local processor linear, [d x d]
    Param ln_gain, ln_shift;  // LayerNorm affine, [1 x d]
    Param prototypes;         // [K x d], one row per expert (prototype modes)
    Param gate;               // [d x K] (baseline mode)
    bool has_gate = false;
    std::vector<ExpertParams> experts;

    void visit(const std::function<void(Param&)>& f);
};

struct RoutingRecord {
    Mat weights;           // [B x K]; rows are distributions
    std::vector<int> top;  // per-sample argmax expert, ties to lowest index
};

class SrMoeModel {
public:
    ModelConfig cfg;
    StemParams stem;
    std::vector<MoELayer> layers;
    Param head_w, head_b;

    // Builds and initializes all parameters from a single seed.
    static SrMoeModel init(const ModelConfig& cfg, std::uint64_t seed);

    // Fixed traversal order over every parameter; checkpoints, the
    // optimizer, and snapshot/restore all rely on it.
    void visit_params(const std::function<void(Param&)>& f);

    // Traversal over one expert's parameters only.
    void visit_expert_params(int layer, int expert, const std::function<void(Param&)>& f);

    // The weight matrix the spectral penalties target in this layer: the
    // local processor's linear weight in prototype modes, the gate under
    // the baseline-with-penalties ablation.
    Param& penalized_weight(int layer);

    void zero_grads();
    int num_params() const;  // total scalar count
};

// Mixture weights for already-processed features z_prime [B x d]; returns
// the routing node [B x K]. Differentiable through z_prime, prototypes,
// and the gate (hard routing blocks all routing gradients).
NodeId route_op(Tape& t, MoELayer& layer, NodeId z_prime, const ModelConfig& cfg);

// Pure-value convenience wrapper over route_op.
Mat route(MoELayer& layer, const Mat& z_prime, const ModelConfig& cfg);

struct LayerForwardNodes {
    NodeId z_out;
    NodeId routing;  // soft (or one-hot, under hard routing) weights [B x K]
};

LayerForwardNodes moe_layer_forward_op(Tape& t, MoELayer& layer, NodeId z_in,
                                       const ModelConfig& cfg);

std::pair<Mat, RoutingRecord> moe_layer_forward(MoELayer& layer, const Mat& z_in,
                                                const ModelConfig& cfg);

struct ModelForwardNodes {
    NodeId logits;
    std::vector<NodeId> routing;        // one node per layer
    std::vector<RoutingRecord> records;
};

ModelForwardNodes model_forward_op(Tape& t, SrMoeModel& m, const Mat& images);

std::pair<Mat, std::vector<RoutingRecord>> model_forward(SrMoeModel& m, const Mat& images);

struct TotalLossNodes {
    NodeId total;
    LossBreakdown breakdown;
    std::vector<RoutingRecord> records;
};

// Task cross-entropy plus the active penalties:
// total = task + alpha * sum over layers of (spectral + rank penalties)
//              + beta * mean over layers of the usage-diversity penalty.
// The spectral/rank sum participates only when the mode calls for it; the
// breakdown stores the unweighted term values.
TotalLossNodes total_loss_op(Tape& t, SrMoeModel& m, const Mat& images,
                             const std::vector<int>& labels);

LossBreakdown total_loss(SrMoeModel& m, const Mat& images, const std::vector<int>& labels);

// Extracts a routing record (weights copy + per-row argmax) from a node.
RoutingRecord make_record(const Tape& t, NodeId routing);

}  // namespace srmoe
