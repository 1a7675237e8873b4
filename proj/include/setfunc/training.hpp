#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "setfunc/errors.hpp"
#include "setfunc/set_model.hpp"

namespace setfunc {

enum class LossKind { Mse, CrossEntropy };

struct OptimizerCfg {
    enum class Kind { Sgd, Adam };
    Kind kind = Kind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    OptimizerCfg optimizer;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Mse;
    // Applied to the learnable p after every optimizer step.
    double p_min = -10.0;
    double p_max = 10.0;

    void validate() const;
};

struct Metrics {
    double loss = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double accuracy = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    Metrics train;
    Metrics val;
    double p = 0.0;
    double seconds = 0.0;  // wall time; reported only in search histories
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::vector<double> p_trajectory;  // p at the end of each epoch
    double final_loss = 0.0;
};

/// Mean-reduced squared error and its gradient w.r.t. pred.
std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target);

/// Mean-reduced cross entropy over max-shifted softmax rows; grad w.r.t.
/// the logits.
std::pair<double, Matrix> cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

/// Flat views over every trainable scalar, ordered phi weights, phi biases,
/// rho weights, rho biases, then p when learnable. flatten_grads emits the
/// matching order.
struct ParamRefs {
    std::vector<double*> ptrs;
    std::size_t size() const { return ptrs.size(); }
};

ParamRefs collect_params(SetModel& model);
std::vector<double> flatten_grads(const ModelGrads& grads, const SetModel& model);

struct AdamState {
    std::vector<double> m, v;
    std::uint64_t t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(ParamRefs& params, std::span<const double> grads, AdamState& state,
               const OptimizerCfg& opt);
void sgd_step(ParamRefs& params, std::span<const double> grads, double lr);

void apply_p_clamp(SetModel& model, const TrainConfig& cfg);

/// Raised when training hits a non-finite value; carries the epochs that
/// completed before the abort.
struct TrainAborted : NumericError {
    TrainReport partial;
    TrainAborted(const std::string& msg, TrainReport report)
        : NumericError(msg), partial(std::move(report)) {}
};

/// Deterministic minibatch training: (seed, config, data) fixes the shuffle
/// order, every update, and every reported number. start_epoch resumes the
/// epoch numbering (and shuffle streams) of an interrupted run; cfg.epochs
/// is the total epoch count.
TrainReport train(SetModel& model, const SetBatch& train_set, const SetBatch& val_set,
                  const TrainConfig& cfg, std::size_t start_epoch = 0);

Metrics evaluate(const SetModel& model, const SetBatch& data, LossKind loss);

/// Report serialization per the experiment interfaces: JSON document and
/// CSV rows (epoch, split, loss, rmse, mae, accuracy, p).
std::string report_to_csv(const TrainReport& report);

}  // namespace setfunc
