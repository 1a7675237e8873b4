#include "setfunc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "setfunc/errors.hpp"
#include "setfunc/kernels.hpp"

namespace setfunc {

namespace {

// Shortest decimal that parses back to the same double; keeps CSV output
// exact and byte-deterministic.
std::string dtoa(double x) { return nlohmann::json(x).dump(); }

std::string first_non_finite_tensor(const SetBatch& batch, const ForwardCache& cache,
                                    double loss) {
    if (!batch.elements.all_finite()) return "elements";
    if (!cache.embeddings.all_finite()) return "embeddings";
    if (!cache.aggregated.all_finite()) return "aggregated";
    if (!cache.predictions.all_finite()) return "predictions";
    if (!std::isfinite(loss)) return "loss";
    return "gradients";
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (!(optimizer.lr > 0.0)) throw ConfigError("TrainConfig: lr must be > 0");
    if (!(p_min < p_max)) throw ConfigError("TrainConfig: p_min must be < p_max");
}

std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target)) {
        throw ShapeError("mse_loss: pred " + shape_str(pred) + " vs target " + shape_str(target));
    }
    const auto n = static_cast<double>(pred.size());
    Matrix grad(pred.rows(), pred.cols());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        acc += d * d;
        grad.data()[i] = 2.0 * d / n;
    }
    return {acc / n, std::move(grad)};
}

std::pair<double, Matrix> cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) {
        throw ShapeError("cross_entropy_loss: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
    }
    const std::size_t b = logits.rows(), c = logits.cols();
    Matrix grad(b, c);
    double acc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c) {
            throw DomainError("cross_entropy_loss: label " + std::to_string(label) +
                              " out of range for " + std::to_string(c) + " classes");
        }
        const double* row = logits.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double log_z = mx + std::log(z);
        acc += log_z - row[label];
        for (std::size_t j = 0; j < c; ++j) {
            const double softmax = std::exp(row[j] - log_z);
            grad(i, j) = (softmax - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) /
                         static_cast<double>(b);
        }
    }
    return {acc / static_cast<double>(b), std::move(grad)};
}

ParamRefs collect_params(SetModel& model) {
    ParamRefs refs;
    for (auto& w : model.phi.weights)
        for (double& v : w.data()) refs.ptrs.push_back(&v);
    for (auto& b : model.phi.biases)
        for (double& v : b) refs.ptrs.push_back(&v);
    for (auto& w : model.rho.weights)
        for (double& v : w.data()) refs.ptrs.push_back(&v);
    for (auto& b : model.rho.biases)
        for (double& v : b) refs.ptrs.push_back(&v);
    if (model.agg.has_learnable_p()) refs.ptrs.push_back(&model.agg.p);
    return refs;
}

std::vector<double> flatten_grads(const ModelGrads& grads, const SetModel& model) {
    std::vector<double> flat;
    for (const auto& w : grads.phi.weights)
        flat.insert(flat.end(), w.data().begin(), w.data().end());
    for (const auto& b : grads.phi.biases) flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& w : grads.rho.weights)
        flat.insert(flat.end(), w.data().begin(), w.data().end());
    for (const auto& b : grads.rho.biases) flat.insert(flat.end(), b.begin(), b.end());
    if (model.agg.has_learnable_p()) flat.push_back(grads.p);
    return flat;
}

void adam_step(ParamRefs& params, std::span<const double> grads, AdamState& state,
               const OptimizerCfg& opt) {
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw ShapeError("adam_step: parameter/gradient/state size mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
        state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        *params.ptrs[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
}

void sgd_step(ParamRefs& params, std::span<const double> grads, double lr) {
    if (grads.size() != params.size()) throw ShapeError("sgd_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) *params.ptrs[i] -= lr * grads[i];
}

void apply_p_clamp(SetModel& model, const TrainConfig& cfg) {
    if (!model.agg.has_learnable_p()) return;
    model.agg.p = std::clamp(model.agg.p, cfg.p_min, cfg.p_max);
}

Metrics evaluate(const SetModel& model, const SetBatch& data, LossKind loss) {
    Metrics metrics;
    const Matrix pred = model_forward(model, data, nullptr);
    const std::size_t b = data.num_sets();

    if (loss == LossKind::CrossEntropy) {
        const auto [ce, grad] = cross_entropy_loss(pred, data.labels);
        metrics.loss = ce;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < b; ++i) {
            std::size_t argmax = 0;
            for (std::size_t j = 1; j < pred.cols(); ++j)
                if (pred(i, j) > pred(i, argmax)) argmax = j;
            hits += argmax == static_cast<std::size_t>(data.labels[i]);
        }
        metrics.accuracy = static_cast<double>(hits) / static_cast<double>(b);
        return metrics;
    }

    Matrix target(b, pred.cols());
    if (pred.cols() != 1 || data.targets.size() != b) {
        throw ShapeError("evaluate: regression expects scalar predictions and one target per set");
    }
    for (std::size_t i = 0; i < b; ++i) target(i, 0) = data.targets[i];
    const auto [mse, grad] = mse_loss(pred, target);
    metrics.loss = mse;

    // Pairwise-deterministic reductions for the reported metrics.
    std::vector<double> sq(b), ab(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double d = pred(i, 0) - target(i, 0);
        sq[i] = d * d;
        ab[i] = std::abs(d);
    }
    metrics.rmse = std::sqrt(tree_sum(sq) / static_cast<double>(b));
    metrics.mae = tree_sum(ab) / static_cast<double>(b);
    return metrics;
}

TrainReport train(SetModel& model, const SetBatch& train_set, const SetBatch& val_set,
                  const TrainConfig& cfg, std::size_t start_epoch) {
    cfg.validate();
    train_set.validate();
    if (val_set.num_sets() > 0) val_set.validate();

    ParamRefs refs = collect_params(model);
    AdamState state(refs.size());
    const Rng base(cfg.seed);
    const std::size_t b = train_set.num_sets();

    TrainReport report;
    for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto epoch_begin = std::chrono::steady_clock::now();
        // Shuffle stream keyed by the absolute epoch, so a resumed run
        // walks the identical batch order.
        Rng shuffle_rng = base.split(0x9E3700000000ULL + epoch);
        std::vector<std::size_t> order(b);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = b; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < b; start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, b);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const SetBatch mb = train_set.gather(idx);

            ForwardCache cache;
            const Matrix pred = model_forward(model, mb, &cache);

            double loss_value = 0.0;
            Matrix loss_grad;
            if (cfg.loss == LossKind::CrossEntropy) {
                auto [lv, lg] = cross_entropy_loss(pred, mb.labels);
                loss_value = lv;
                loss_grad = std::move(lg);
            } else {
                Matrix target(pred.rows(), pred.cols());
                for (std::size_t i = 0; i < mb.targets.size(); ++i) target(i, 0) = mb.targets[i];
                auto [lv, lg] = mse_loss(pred, target);
                loss_value = lv;
                loss_grad = std::move(lg);
            }
            if (!std::isfinite(loss_value)) {
                throw TrainAborted("train: non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(start / cfg.batch_size) +
                                       "; first non-finite tensor: " +
                                       first_non_finite_tensor(mb, cache, loss_value),
                                   report);
            }

            const ModelGrads grads = model_backward(model, mb, cache, loss_grad);
            if (!grads.all_finite()) {
                throw TrainAborted("train: non-finite gradient at epoch " +
                                       std::to_string(epoch) +
                                       "; first non-finite tensor: gradients",
                                   report);
            }
            const std::vector<double> flat = flatten_grads(grads, model);
            if (cfg.optimizer.kind == OptimizerCfg::Kind::Adam) {
                adam_step(refs, flat, state, cfg.optimizer);
            } else {
                sgd_step(refs, flat, cfg.optimizer.lr);
            }
            apply_p_clamp(model, cfg);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train = evaluate(model, train_set, cfg.loss);
        if (val_set.num_sets() > 0) rec.val = evaluate(model, val_set, cfg.loss);
        rec.p = model.agg.p;
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_begin).count();
        report.p_trajectory.push_back(model.agg.p);
        report.final_loss = rec.train.loss;
        report.epochs.push_back(rec);
    }
    return report;
}

std::string report_to_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "epoch,split,loss,rmse,mae,accuracy,p\n";
    for (const EpochRecord& rec : report.epochs) {
        out << rec.epoch << ",train," << dtoa(rec.train.loss) << ',' << dtoa(rec.train.rmse)
            << ',' << dtoa(rec.train.mae) << ',' << dtoa(rec.train.accuracy) << ','
            << dtoa(rec.p) << '\n';
        out << rec.epoch << ",val," << dtoa(rec.val.loss) << ',' << dtoa(rec.val.rmse) << ','
            << dtoa(rec.val.mae) << ',' << dtoa(rec.val.accuracy) << ',' << dtoa(rec.p) << '\n';
    }
    return out.str();
}

}  // namespace setfunc
