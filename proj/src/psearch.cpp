#include "setfunc/psearch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "setfunc/errors.hpp"

namespace setfunc {

using nlohmann::json;

namespace {

constexpr double kKernelLengthScale = 2.0;
constexpr double kJitterStart = 1e-6;
constexpr double kJitterMax = 1e-2;
constexpr std::size_t kCandidateGrid = 1000;

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool better(double a, double b, SearchDirection dir) {
    return dir == SearchDirection::Minimize ? a < b : a > b;
}

void pick_best_from_history(SearchResult& result, SearchDirection dir) {
    if (result.history.empty()) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.history.size(); ++i) {
        if (better(result.history[i].objective, result.history[best].objective, dir)) best = i;
    }
    result.best_p = result.history[best].p;
    result.best_objective = result.history[best].objective;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// In-place Cholesky of a small SPD matrix; returns false when a pivot
// fails.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) acc -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(acc > 0.0)) return false;
                a[i * n + i] = std::sqrt(acc);
            } else {
                a[i * n + j] = acc / a[j * n + j];
            }
        }
    }
    return true;
}

// Solves L Lᵀ x = b given the Cholesky factor in the lower triangle.
std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   std::vector<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * n + k] * b[k];
        b[i] /= l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= l[k * n + ii] * b[k];
        b[ii] /= l[ii * n + ii];
    }
    return b;
}

double se_kernel(double a, double b) {
    const double d = (a - b) / kKernelLengthScale;
    return std::exp(-0.5 * d * d);
}

}  // namespace

void SearchConfig::validate() const {
    if (!(p_min <= p_max)) throw ConfigError("SearchConfig: empty range");
    if (strategy == Strategy::Grid && !(step > 0.0))
        throw ConfigError("SearchConfig: grid step must be > 0");
    if (strategy == Strategy::Bayes) {
        if (init_points < 2) throw ConfigError("SearchConfig: init_points must be >= 2");
        if (trials < init_points)
            throw ConfigError("SearchConfig: trials must be >= init_points");
    }
}

SearchResult grid_search(const PObjective& objective, const SearchConfig& cfg) {
    cfg.validate();
    std::vector<double> points;
    for (double p = cfg.p_min; p <= cfg.p_max + 1e-12; p += cfg.step) points.push_back(p);
    if (points.empty()) throw ConfigError("grid_search: empty grid");

    SearchResult result;
    for (double p : points) {
        const auto t0 = std::chrono::steady_clock::now();
        const double value = objective(p);
        result.history.push_back({p, value, now_seconds(t0)});
    }
    // Ascending scan with strict improvement: ties keep the smaller p.
    pick_best_from_history(result, cfg.direction);
    return result;
}

SearchResult bayes_search(const PObjective& objective, const SearchConfig& cfg) {
    cfg.validate();
    SearchResult result;
    const double sign = cfg.direction == SearchDirection::Maximize ? 1.0 : -1.0;

    std::vector<double> xs, ys;  // ys in maximize orientation
    const auto evaluate_at = [&](double p) {
        const auto t0 = std::chrono::steady_clock::now();
        const double value = objective(p);
        result.history.push_back({p, value, now_seconds(t0)});
        xs.push_back(p);
        ys.push_back(sign * value);
    };

    // Low-discrepancy initialization: evenly spaced over the range,
    // endpoints included.
    for (std::size_t i = 0; i < cfg.init_points; ++i) {
        const double frac = cfg.init_points == 1
                                ? 0.5
                                : static_cast<double>(i) / static_cast<double>(cfg.init_points - 1);
        evaluate_at(cfg.p_min + frac * (cfg.p_max - cfg.p_min));
    }

    std::vector<double> candidates(kCandidateGrid);
    for (std::size_t i = 0; i < kCandidateGrid; ++i) {
        candidates[i] = cfg.p_min + (cfg.p_max - cfg.p_min) * static_cast<double>(i) /
                                        static_cast<double>(kCandidateGrid - 1);
    }

    while (result.history.size() < cfg.trials) {
        const std::size_t n = xs.size();

        // Standardize observations for a unit-variance prior.
        double mean = 0.0;
        for (double y : ys) mean += y;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double y : ys) var += (y - mean) * (y - mean);
        var /= static_cast<double>(n);
        if (var == 0.0) {
            // Degenerate posterior scale: expected improvement is zero
            // everywhere in the objective's units, a flat acquisition, and
            // the tie rule takes the smallest candidate.
            evaluate_at(candidates[0]);
            continue;
        }
        const double scale = std::sqrt(var);
        std::vector<double> y_std(n);
        for (std::size_t i = 0; i < n; ++i) y_std[i] = (ys[i] - mean) / scale;

        // Fit: K + jitter·I, escalating jitter on singular solves.
        std::vector<double> chol;
        double jitter = kJitterStart;
        bool ok = false;
        while (jitter <= kJitterMax) {
            chol.assign(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    chol[i * n + j] = se_kernel(xs[i], xs[j]) + (i == j ? jitter : 0.0);
            if (cholesky(chol, n)) {
                ok = true;
                break;
            }
            jitter *= 10.0;
        }
        if (!ok) throw NumericError("bayes_search: GP solve singular even at jitter 1e-2");
        const std::vector<double> alpha = cholesky_solve(chol, n, y_std);

        double best_seen = y_std[0];
        for (double y : y_std) best_seen = std::max(best_seen, y);

        // Expected improvement over the candidate grid; strict > keeps the
        // smallest candidate on ties.
        double best_ei = -1.0, best_candidate = candidates[0];
        std::vector<double> k_star(n);
        for (double c : candidates) {
            for (std::size_t i = 0; i < n; ++i) k_star[i] = se_kernel(c, xs[i]);
            double mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) mu += k_star[i] * alpha[i];
            const std::vector<double> v = cholesky_solve(chol, n, k_star);
            double var_c = se_kernel(c, c);
            for (std::size_t i = 0; i < n; ++i) var_c -= k_star[i] * v[i];
            var_c = std::max(var_c, 0.0);
            const double sigma = std::sqrt(var_c);

            double ei = 0.0;
            if (sigma > 1e-12) {
                const double z = (mu - best_seen) / sigma;
                ei = (mu - best_seen) * normal_cdf(z) + sigma * normal_pdf(z);
            } else {
                ei = std::max(mu - best_seen, 0.0);
            }
            if (ei > best_ei) {
                best_ei = ei;
                best_candidate = c;
            }
        }
        evaluate_at(best_candidate);
    }

    pick_best_from_history(result, cfg.direction);
    return result;
}

SearchResult gradient_search(const GradientSearchInputs& inputs, const SearchConfig& cfg) {
    cfg.validate();
    if (!(inputs.agg.kind == AggKind::PowerMean && inputs.agg.learnable)) {
        throw ConfigError("gradient_search: aggregator must be a learnable power mean");
    }
    if (!inputs.train_set || !inputs.val_set) {
        throw ConfigError("gradient_search: train and validation sets required");
    }

    Rng init_rng(inputs.init_seed);
    SetModel model = init_model(inputs.phi, inputs.agg, inputs.rho, init_rng);
    TrainConfig train_cfg = inputs.train_cfg;
    train_cfg.p_min = cfg.p_min;
    train_cfg.p_max = cfg.p_max;

    SearchResult result;
    const auto record = [&](const TrainReport& report) {
        for (const EpochRecord& rec : report.epochs) {
            const double objective =
                train_cfg.loss == LossKind::CrossEntropy ? rec.val.accuracy : rec.val.rmse;
            result.history.push_back({rec.p, objective, rec.seconds});
        }
    };

    try {
        const TrainReport report = train(model, *inputs.train_set, *inputs.val_set, train_cfg);
        record(report);
    } catch (const TrainAborted& e) {
        record(e.partial);
        result.aborted = true;
        result.abort_reason = e.what();
        if (!result.history.empty()) {
            result.best_p = result.history.back().p;
            result.best_objective = result.history.back().objective;
        }
        return result;
    }

    // Best pair is the final epoch: p is wherever the joint run ended.
    result.best_p = model.agg.p;
    result.best_objective = result.history.empty() ? 0.0 : result.history.back().objective;
    return result;
}

std::string search_result_to_csv(const SearchResult& result) {
    std::ostringstream out;
    out << "trial,p,objective,seconds\n";
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const TrialRecord& rec = result.history[i];
        out << i << ',' << json(rec.p).dump() << ',' << json(rec.objective).dump() << ','
            << json(rec.wall_seconds).dump() << '\n';
    }
    return out.str();
}

json search_result_to_json(const SearchResult& result) {
    json j;
    j["format_version"] = 1;
    j["best_p"] = result.best_p;
    j["best_objective"] = result.best_objective;
    j["aborted"] = result.aborted;
    if (result.aborted) j["abort_reason"] = result.abort_reason;
    json history = json::array();
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const TrialRecord& rec = result.history[i];
        history.push_back({{"trial", i},
                           {"p", rec.p},
                           {"objective", rec.objective},
                           {"seconds", rec.wall_seconds}});
    }
    j["history"] = std::move(history);
    return j;
}

}  // namespace setfunc
