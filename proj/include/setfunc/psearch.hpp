#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setfunc/tasks.hpp"
#include "setfunc/training.hpp"

namespace setfunc {

enum class SearchDirection { Minimize, Maximize };

struct SearchConfig {
    enum class Strategy { Grid, GradientJoint, Bayes };

    Strategy strategy = Strategy::Grid;
    double p_min = -10.0;
    double p_max = 10.0;
    double step = 0.5;            // Grid
    std::size_t trials = 30;      // Bayes budget, init points included
    std::size_t init_points = 5;  // Bayes
    SearchDirection direction = SearchDirection::Minimize;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrialRecord {
    double p = 0.0;
    double objective = 0.0;
    double wall_seconds = 0.0;
};

struct SearchResult {
    double best_p = 0.0;
    double best_objective = 0.0;
    std::vector<TrialRecord> history;
    bool aborted = false;
    std::string abort_reason;
};

/// Scalar objective p ↦ metric; must be deterministic given p (evaluation
/// seeds are fixed per trial by the caller).
using PObjective = std::function<double(double)>;

/// Exhaustive sweep p_min, p_min+step, …; ties resolve to the smaller p.
SearchResult grid_search(const PObjective& objective, const SearchConfig& cfg);

/// 1-D Gaussian-process surrogate (squared-exponential kernel, length
/// scale 2.0, observation jitter 1e-6 escalated ×10 on singular solves up
/// to 1e-2) with expected improvement maximized over a 1000-point grid.
/// init_points evenly spaced evaluations seed the surrogate; acquisition
/// ties resolve to the smallest candidate.
SearchResult bayes_search(const PObjective& objective, const SearchConfig& cfg);

struct GradientSearchInputs {
    MlpSpec phi;
    AggregatorSpec agg;  // must be a learnable power mean
    MlpSpec rho;
    TrainConfig train_cfg;
    const SetBatch* train_set = nullptr;
    const SetBatch* val_set = nullptr;
    std::uint64_t init_seed = 0;
};

/// One joint training run optimizing p with the weights; the history holds
/// the per-epoch (p, validation objective). best_p is the final clamped p.
/// Divergence aborts with the partial history.
SearchResult gradient_search(const GradientSearchInputs& inputs, const SearchConfig& cfg);

/// CSV columns: trial, p, objective, seconds.
std::string search_result_to_csv(const SearchResult& result);
nlohmann::json search_result_to_json(const SearchResult& result);

}  // namespace setfunc
