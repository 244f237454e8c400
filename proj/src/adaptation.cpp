#include "srmoe/adaptation.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "srmoe/checkpoint.hpp"
#include "srmoe/errors.hpp"
#include "srmoe/rng.hpp"
#include "srmoe/train.hpp"

namespace srmoe {

std::vector<int> winning_path(SrMoeModel& m, const Mat& x_new) {
    if (x_new.rows != 1) throw std::invalid_argument("winning_path: expected a single sample");
    const auto records = model_forward(m, x_new).second;
    std::vector<int> path;
    path.reserve(records.size());
    for (const RoutingRecord& r : records) path.push_back(r.top.at(0));
    return path;
}

SurgicalPlan make_plan(SrMoeModel& m, const Mat& x_new, const OneshotConfig& cfg) {
    cfg.validate();
    SurgicalPlan plan;
    plan.path = winning_path(m, x_new);
    plan.lr = cfg.lr;
    plan.steps = cfg.steps;
    plan.anchor_size = cfg.anchor_size;
    plan.update_head = cfg.update_head;
    return plan;
}

namespace {

// Anchor rows first, the novel sample as the last row.
void combine_batch(const Mat& anchor_images, const std::vector<int>& anchor_labels,
                   const Mat& x_new, int y_new, Mat& batch, std::vector<int>& labels) {
    const int na = anchor_images.rows;
    if (na != static_cast<int>(anchor_labels.size())) {
        throw std::invalid_argument("combine_batch: anchor labels do not match rows");
    }
    if (na > 0 && anchor_images.cols != x_new.cols) {
        throw std::invalid_argument("combine_batch: anchor width does not match the sample");
    }
    batch = Mat(na + 1, x_new.cols);
    if (na > 0) {
        std::memcpy(batch.data.data(), anchor_images.data.data(),
                    sizeof(double) * anchor_images.data.size());
    }
    std::memcpy(batch.row(na), x_new.data.data(), sizeof(double) * static_cast<std::size_t>(x_new.cols));
    labels = anchor_labels;
    labels.push_back(y_new);
}

}  // namespace

void surgical_update(SrMoeModel& m, const Mat& x_new, int y_new,
                     const Mat& anchor_images, const std::vector<int>& anchor_labels,
                     const SurgicalPlan& plan) {
    if (x_new.rows != 1) throw std::invalid_argument("surgical_update: expected a single sample");
    if (static_cast<int>(plan.path.size()) != m.cfg.num_layers) {
        throw std::invalid_argument("surgical_update: plan path length does not match the model");
    }
    if (plan.steps < 1) throw std::invalid_argument("surgical_update: steps must be >= 1");
    if (anchor_images.rows == 0) {
        std::fprintf(stderr,
                     "warning: one-shot update without an anchor batch; "
                     "a single-sample gradient risks collapsing the experts it touches\n");
    }

    Mat batch;
    std::vector<int> labels;
    combine_batch(anchor_images, anchor_labels, x_new, y_new, batch, labels);

    m.visit_params([](Param& p) { p.trainable = false; });
    for (int l = 0; l < m.cfg.num_layers; ++l) {
        m.visit_expert_params(l, plan.path[static_cast<std::size_t>(l)],
                              [](Param& p) { p.trainable = true; });
    }
    if (plan.update_head) {
        m.head_w.trainable = true;
        m.head_b.trainable = true;
    }

    for (int step = 0; step < plan.steps; ++step) {
        m.zero_grads();
        Tape tape;
        const TotalLossNodes loss = total_loss_op(tape, m, batch, labels);
        if (!std::isfinite(loss.breakdown.total)) {
            throw NumericError("surgical_update: non-finite loss");
        }
        tape.backward(loss.total);
        sgd_step(m, plan.lr);
    }

    m.visit_params([](Param& p) { p.trainable = true; });
}

Mat gradient_vitality(SrMoeModel& m, const Mat& x_new, int y_new,
                      const Mat& anchor_images, const std::vector<int>& anchor_labels) {
    if (x_new.rows != 1) throw std::invalid_argument("gradient_vitality: expected a single sample");
    Mat batch;
    std::vector<int> labels;
    combine_batch(anchor_images, anchor_labels, x_new, y_new, batch, labels);

    m.zero_grads();
    Tape tape;
    const TotalLossNodes loss = total_loss_op(tape, m, batch, labels);
    if (!std::isfinite(loss.breakdown.total)) {
        throw NumericError("gradient_vitality: non-finite loss");
    }
    tape.backward(loss.total);

    Mat norms(m.cfg.num_layers, m.cfg.num_experts);
    for (int l = 0; l < m.cfg.num_layers; ++l) {
        for (int e = 0; e < m.cfg.num_experts; ++e) {
            double acc = 0.0;
            m.visit_expert_params(l, e, [&acc](Param& p) {
                for (double g : p.grad.data) acc += g * g;
            });
            norms.at(l, e) = std::sqrt(acc);
        }
    }
    m.zero_grads();
    return norms;
}

std::int64_t& Utilization::at(int c, int l, int e) {
    return counts.at(static_cast<std::size_t>((c * layers + l) * experts + e));
}

std::int64_t Utilization::at(int c, int l, int e) const {
    return counts.at(static_cast<std::size_t>((c * layers + l) * experts + e));
}

Utilization path_utilization(SrMoeModel& m, const Dataset& ds, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("path_utilization: batch_size must be >= 1");
    Utilization u;
    u.classes = ds.classes;
    u.layers = m.cfg.num_layers;
    u.experts = m.cfg.num_experts;
    u.counts.assign(static_cast<std::size_t>(u.classes) * u.layers * u.experts, 0);

    for (int start = 0; start < ds.size(); start += batch_size) {
        const int count = std::min(batch_size, ds.size() - start);
        Mat batch(count, ds.feature_dim());
        std::memcpy(batch.data.data(), ds.images.row(start), sizeof(double) * batch.data.size());
        const auto records = model_forward(m, batch).second;
        for (int i = 0; i < count; ++i) {
            const int cls = ds.labels.at(static_cast<std::size_t>(start + i));
            for (int l = 0; l < u.layers; ++l) {
                ++u.at(cls, l, records[static_cast<std::size_t>(l)].top[static_cast<std::size_t>(i)]);
            }
        }
    }
    return u;
}

std::vector<std::vector<int>> majority_paths(const Utilization& u) {
    std::vector<std::vector<int>> paths(static_cast<std::size_t>(u.classes));
    for (int c = 0; c < u.classes; ++c) {
        std::vector<int>& path = paths[static_cast<std::size_t>(c)];
        path.resize(static_cast<std::size_t>(u.layers));
        for (int l = 0; l < u.layers; ++l) {
            int best = 0;
            for (int e = 1; e < u.experts; ++e) {
                if (u.at(c, l, e) > u.at(c, l, best)) best = e;
            }
            path[static_cast<std::size_t>(l)] = best;
        }
    }
    return paths;
}

int path_diversity(const Utilization& u) {
    const auto paths = majority_paths(u);
    int distinct = 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i; ++j) {
            if (paths[j] == paths[i]) {
                seen = true;
                break;
            }
        }
        if (!seen) ++distinct;
    }
    return distinct;
}

InterferenceReport interference_experiment(SrMoeModel& m, const Dataset& novel,
                                           const Dataset& test, const Dataset& anchor_source,
                                           const OneshotConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (novel.size() == 0) throw std::invalid_argument("interference_experiment: empty novel set");
    if (test.size() == 0) throw std::invalid_argument("interference_experiment: empty test set");
    if (cfg.anchor_size > 0 && anchor_source.size() == 0) {
        throw std::invalid_argument("interference_experiment: empty anchor source");
    }

    InterferenceReport rep;
    rep.novel_count = novel.size();
    rep.pre_accuracy = evaluate_accuracy(m, test);

    const Utilization util = path_utilization(m, test);
    rep.path_diversity = path_diversity(util);
    rep.majority_path = majority_paths(util);

    const int n = novel.size();
    rep.per_sample_delta.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<Mat> vitality(static_cast<std::size_t>(n));
    const std::vector<Mat> snapshot = snapshot_values(m);

    // Trials are independent; each works on its own copy of the model, so
    // this loop parallelizes without any cross-trial state.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        SrMoeModel trial = m;
        restore_values(trial, snapshot);

        Mat x_new(1, novel.feature_dim());
        std::memcpy(x_new.data.data(), novel.images.row(i),
                    sizeof(double) * static_cast<std::size_t>(novel.feature_dim()));
        const int y_new = novel.labels[static_cast<std::size_t>(i)];

        // Anchor batch: uniform without replacement, reseeded per trial.
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const int take = std::min(cfg.anchor_size, anchor_source.size());
        std::vector<int> idx(static_cast<std::size_t>(anchor_source.size()));
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        Mat anchors(take, anchor_source.feature_dim());
        std::vector<int> anchor_labels(static_cast<std::size_t>(take));
        for (int a = 0; a < take; ++a) {
            std::memcpy(anchors.row(a), anchor_source.images.row(idx[static_cast<std::size_t>(a)]),
                        sizeof(double) * static_cast<std::size_t>(anchor_source.feature_dim()));
            anchor_labels[static_cast<std::size_t>(a)] =
                anchor_source.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
        }

        const SurgicalPlan plan = make_plan(trial, x_new, cfg);
        vitality[static_cast<std::size_t>(i)] =
            gradient_vitality(trial, x_new, y_new, anchors, anchor_labels);
        surgical_update(trial, x_new, y_new, anchors, anchor_labels, plan);

        rep.per_sample_delta[static_cast<std::size_t>(i)] =
            evaluate_accuracy(trial, test) - rep.pre_accuracy;
    }

    // Serial aggregation keeps the report bitwise reproducible.
    std::vector<double> class_sum(static_cast<std::size_t>(novel.classes), 0.0);
    std::vector<int> class_count(static_cast<std::size_t>(novel.classes), 0);
    for (int i = 0; i < n; ++i) {
        const int cls = novel.labels[static_cast<std::size_t>(i)];
        class_sum[static_cast<std::size_t>(cls)] += rep.per_sample_delta[static_cast<std::size_t>(i)];
        ++class_count[static_cast<std::size_t>(cls)];
    }
    rep.class_delta.assign(static_cast<std::size_t>(novel.classes), 0.0);
    double mean = 0.0;
    for (int c = 0; c < novel.classes; ++c) {
        if (class_count[static_cast<std::size_t>(c)] == 0) {
            throw std::invalid_argument("interference_experiment: class " + std::to_string(c) +
                                        " has no novel samples");
        }
        rep.class_delta[static_cast<std::size_t>(c)] =
            class_sum[static_cast<std::size_t>(c)] / class_count[static_cast<std::size_t>(c)];
        mean += rep.class_delta[static_cast<std::size_t>(c)];
    }
    rep.mean_delta = mean / novel.classes;

    rep.vitality = Mat(m.cfg.num_layers, m.cfg.num_experts);
    for (int i = 0; i < n; ++i) rep.vitality.add_scaled(vitality[static_cast<std::size_t>(i)], 1.0 / n);
    return rep;
}

}  // namespace srmoe
