#include "srmoe/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "srmoe/checkpoint.hpp"
#include "srmoe/errors.hpp"
#include "srmoe/linalg.hpp"
#include "srmoe/rng.hpp"

namespace srmoe {

void sgd_step(SrMoeModel& m, double lr) {
    if (!(lr >= 0.0)) throw std::invalid_argument("sgd_step: lr must be non-negative");
    if (lr == 0.0) return;
    m.visit_params([lr](Param& p) {
        if (p.trainable) p.value.add_scaled(p.grad, -lr);
    });
}

namespace {

Mat gather_rows(const Dataset& ds, const std::vector<int>& rows, int from, int count) {
    Mat out(count, ds.feature_dim());
    for (int i = 0; i < count; ++i) {
        std::memcpy(out.row(i), ds.images.row(rows[static_cast<std::size_t>(from + i)]),
                    sizeof(double) * static_cast<std::size_t>(ds.feature_dim()));
    }
    return out;
}

}  // namespace

double evaluate_accuracy(SrMoeModel& m, const Dataset& ds, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("evaluate_accuracy: batch_size must be >= 1");
    if (ds.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty dataset");
    int correct = 0;
    for (int start = 0; start < ds.size(); start += batch_size) {
        const int count = std::min(batch_size, ds.size() - start);
        Mat batch(count, ds.feature_dim());
        std::memcpy(batch.data.data(), ds.images.row(start),
                    sizeof(double) * batch.data.size());
        const Mat logits = model_forward(m, batch).first;
        for (int i = 0; i < count; ++i) {
            const double* lr_ = logits.row(i);
            int best = 0;
            for (int c = 1; c < logits.cols; ++c) {
                if (lr_[c] > lr_[best]) best = c;
            }
            if (best == ds.labels[static_cast<std::size_t>(start + i)]) ++correct;
        }
    }
    return static_cast<double>(correct) / ds.size();
}

TrainResult train_model(SrMoeModel& m, const Dataset& train_set, const Dataset& val_set,
                        const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train_set.size() == 0) throw std::invalid_argument("train_model: empty training set");

    TrainResult res;
    res.best_checkpoint = serialize_model(m);
    res.best_val_accuracy = evaluate_accuracy(m, val_set);
    res.best_epoch = 0;

    std::vector<int> order(static_cast<std::size_t>(train_set.size()));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        LossBreakdown sum;
        for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, train_set.size() - start);
            const Mat batch = gather_rows(train_set, order, start, count);
            std::vector<int> labels(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) {
                labels[static_cast<std::size_t>(i)] =
                    train_set.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
            }

            m.zero_grads();
            Tape tape;
            const TotalLossNodes loss = total_loss_op(tape, m, batch, labels);
            if (!std::isfinite(loss.breakdown.total)) {
                throw NumericError("train_model: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }
            tape.backward(loss.total);
            sgd_step(m, cfg.lr);

            sum.task += loss.breakdown.task * count;
            sum.spec += loss.breakdown.spec * count;
            sum.rank += loss.breakdown.rank * count;
            sum.div += loss.breakdown.div * count;
            sum.total += loss.breakdown.total * count;
        }

        EpochLog log;
        log.epoch = epoch;
        const double n = static_cast<double>(train_set.size());
        log.loss.task = sum.task / n;
        log.loss.spec = sum.spec / n;
        log.loss.rank = sum.rank / n;
        log.loss.div = sum.div / n;
        log.loss.total = sum.total / n;
        log.val_accuracy = evaluate_accuracy(m, val_set);
        for (int l = 0; l < m.cfg.num_layers; ++l) {
            const Mat& w = m.penalized_weight(l).value;
            log.sigma.push_back(spectral_norm(w, m.cfg.power_iters, m.cfg.power_tol));
            log.srank.push_back(stable_rank(w, m.cfg.power_iters, m.cfg.power_tol));
        }
        res.logs.push_back(log);

        if (log.val_accuracy > res.best_val_accuracy) {
            res.best_val_accuracy = log.val_accuracy;
            res.best_epoch = epoch;
            res.best_checkpoint = serialize_model(m);
        }
    }
    return res;
}

}  // namespace srmoe
