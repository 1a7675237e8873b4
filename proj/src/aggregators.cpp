#include "setfunc/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "setfunc/errors.hpp"
#include "setfunc/kernels.hpp"

namespace setfunc {

namespace {

std::vector<std::size_t> valid_row_indices(std::size_t n, std::span<const std::uint8_t> mask) {
    std::vector<std::size_t> idx;
    if (mask.empty()) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    if (mask.size() != n) {
        throw ShapeError("aggregate: mask length " + std::to_string(mask.size()) +
                         " does not match row count " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) idx.push_back(i);
    }
    return idx;
}

void require_positive(double x, std::size_t row, std::size_t col, const char* kind) {
    if (!(x > 0.0)) {
        throw DomainError(std::string(kind) + ": nonpositive entry " + std::to_string(x) +
                          " at row " + std::to_string(row) + ", column " + std::to_string(col));
    }
}

// ln M_p over the given logs; stable branch works in log space so |p| up to
// the clamp range never over/underflows.
double log_power_mean_from_logs(std::span<const double> log_x, double p) {
    const std::size_t n = log_x.size();
    if (std::abs(p) < kPowerMeanGeomEps) {
        double acc = 0.0;
        for (double lx : log_x) acc += lx;
        return acc / static_cast<double>(n);
    }
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = p * log_x[i];
    const double lse = logsumexp(scaled);
    return (lse - std::log(static_cast<double>(n))) / p;
}

// softmax of p·log_x, max-shifted.
std::vector<double> power_softmax(std::span<const double> log_x, double p) {
    const std::size_t n = log_x.size();
    std::vector<double> w(n);
    double mx = p * log_x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, p * log_x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(p * log_x[i] - mx);
        z += w[i];
    }
    for (std::size_t i = 0; i < n; ++i) w[i] /= z;
    return w;
}

double mean_of(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

bool all_equal(std::span<const double> v) {
    for (double x : v) {
        if (x != v[0]) return false;
    }
    return true;
}

double variance_of(std::span<const double> v) {
    if (all_equal(v)) return 0.0;  // exact for constant input
    const double mu = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return acc / static_cast<double>(v.size());
}

}  // namespace

// ---- MonotoneMapId ----------------------------------------------------------

double MonotoneMapId::apply(double x) const {
    switch (kind) {
        case Kind::Identity: return x;
        case Kind::Ln:
            if (!(x > 0.0)) throw DomainError("MonotoneMapId(Ln): nonpositive argument");
            return std::log(x);
        case Kind::Exp: return std::exp(x);
        case Kind::Power:
            if (!(x > 0.0)) throw DomainError("MonotoneMapId(Power): nonpositive argument");
            return std::pow(x, q);
    }
    return x;
}

double MonotoneMapId::inverse(double y) const {
    switch (kind) {
        case Kind::Identity: return y;
        case Kind::Ln: return std::exp(y);
        case Kind::Exp:
            if (!(y > 0.0)) throw DomainError("MonotoneMapId(Exp): inverse of nonpositive value");
            return std::log(y);
        case Kind::Power:
            if (!(y > 0.0)) throw DomainError("MonotoneMapId(Power): inverse of nonpositive value");
            return std::pow(y, 1.0 / q);
    }
    return y;
}

double MonotoneMapId::slope(double x) const {
    switch (kind) {
        case Kind::Identity: return 1.0;
        case Kind::Ln: return 1.0 / x;
        case Kind::Exp: return std::exp(x);
        case Kind::Power: return q * std::pow(x, q - 1.0);
    }
    return 1.0;
}

bool MonotoneMapId::requires_positive() const {
    return kind == Kind::Ln || kind == Kind::Power;
}

std::string MonotoneMapId::name() const {
    switch (kind) {
        case Kind::Identity: return "identity";
        case Kind::Ln: return "ln";
        case Kind::Exp: return "exp";
        case Kind::Power: return "power(" + std::to_string(q) + ")";
    }
    return "?";
}

// ---- AggregatorSpec ---------------------------------------------------------

std::string agg_kind_name(AggKind kind) {
    switch (kind) {
        case AggKind::Sum: return "sum";
        case AggKind::Mean: return "mean";
        case AggKind::Max: return "max";
        case AggKind::Min: return "min";
        case AggKind::LogSumExpMean: return "logsumexp_mean";
        case AggKind::PowerMean: return "power_mean";
        case AggKind::QuasiArithmetic: return "quasi_arithmetic";
        case AggKind::WeightedPowerMean: return "weighted_power_mean";
    }
    return "?";
}

bool AggregatorSpec::requires_positive_inputs() const {
    switch (kind) {
        case AggKind::PowerMean:
        case AggKind::WeightedPowerMean: return true;
        case AggKind::QuasiArithmetic: return map.requires_positive();
        default: return false;
    }
}

void AggregatorSpec::validate() const {
    if (kind == AggKind::PowerMean && !std::isfinite(p)) {
        throw ConfigError("AggregatorSpec: power_mean requires finite p; use max/min for the "
                          "infinite limits");
    }
    if (kind == AggKind::QuasiArithmetic && map.kind == MonotoneMapId::Kind::Power) {
        if (!std::isfinite(map.q) || map.q == 0.0) {
            throw ConfigError("AggregatorSpec: quasi_arithmetic power map needs finite q != 0");
        }
    }
    if (kind == AggKind::WeightedPowerMean) {
        if (!std::isfinite(p)) throw ConfigError("AggregatorSpec: weighted_power_mean needs finite p");
        if (weights.empty()) throw ConfigError("AggregatorSpec: weighted_power_mean needs weights");
        double s = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw ValidationError("AggregatorSpec: negative weight");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-9) {
            throw ValidationError("AggregatorSpec: weights sum to " + std::to_string(s) +
                                  ", off the simplex");
        }
    }
}

// ---- forward ----------------------------------------------------------------

std::vector<double> aggregate(const Matrix& emb, std::span<const std::uint8_t> mask,
                              const AggregatorSpec& spec) {
    spec.validate();
    const std::size_t n = emb.rows(), m = emb.cols();
    const std::vector<std::size_t> idx = valid_row_indices(n, mask);
    if (idx.empty()) throw DomainError("aggregate: no valid rows");
    const auto nv = static_cast<double>(idx.size());

    std::vector<double> weights_valid;
    if (spec.kind == AggKind::WeightedPowerMean) {
        if (spec.weights.size() != n) {
            throw ShapeError("aggregate: weighted_power_mean has " +
                             std::to_string(spec.weights.size()) + " weights for " +
                             std::to_string(n) + " rows");
        }
        double s = 0.0;
        for (std::size_t i : idx) s += spec.weights[i];
        if (std::abs(s - 1.0) > 1e-9) {
            throw ValidationError("aggregate: weights over valid rows sum to " +
                                  std::to_string(s) + ", off the simplex");
        }
        weights_valid.reserve(idx.size());
        for (std::size_t i : idx) weights_valid.push_back(spec.weights[i]);
    }

    std::vector<double> out(m, 0.0);
    std::vector<double> col(idx.size());
    std::vector<double> log_col(idx.size());

    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < idx.size(); ++t) col[t] = emb(idx[t], j);

        switch (spec.kind) {
            case AggKind::Sum: {
                double acc = 0.0;
                for (double x : col) acc += x;
                out[j] = acc;
                break;
            }
            case AggKind::Mean: out[j] = mean_of(col); break;
            case AggKind::Max: {
                double best = col[0];
                for (double x : col) best = std::max(best, x);
                out[j] = best;
                break;
            }
            case AggKind::Min: {
                double best = col[0];
                for (double x : col) best = std::min(best, x);
                out[j] = best;
                break;
            }
            case AggKind::LogSumExpMean:
                out[j] = logsumexp(col) - std::log(nv);
                break;
            case AggKind::PowerMean: {
                for (std::size_t t = 0; t < col.size(); ++t) {
                    require_positive(col[t], idx[t], j, "aggregate(power_mean)");
                    log_col[t] = std::log(col[t]);
                }
                out[j] = std::exp(log_power_mean_from_logs(log_col, spec.p));
                break;
            }
            case AggKind::QuasiArithmetic: {
                switch (spec.map.kind) {
                    case MonotoneMapId::Kind::Identity: out[j] = mean_of(col); break;
                    case MonotoneMapId::Kind::Ln: {
                        for (std::size_t t = 0; t < col.size(); ++t) {
                            require_positive(col[t], idx[t], j, "aggregate(quasi_arithmetic ln)");
                            log_col[t] = std::log(col[t]);
                        }
                        out[j] = std::exp(mean_of(log_col));
                        break;
                    }
                    case MonotoneMapId::Kind::Exp: out[j] = logsumexp(col) - std::log(nv); break;
                    case MonotoneMapId::Kind::Power: {
                        for (std::size_t t = 0; t < col.size(); ++t) {
                            require_positive(col[t], idx[t], j,
                                             "aggregate(quasi_arithmetic power)");
                            log_col[t] = std::log(col[t]);
                        }
                        out[j] = std::exp(log_power_mean_from_logs(log_col, spec.map.q));
                        break;
                    }
                }
                break;
            }
            case AggKind::WeightedPowerMean: {
                for (std::size_t t = 0; t < col.size(); ++t)
                    require_positive(col[t], idx[t], j, "aggregate(weighted_power_mean)");
                out[j] = weighted_power_mean(col, weights_valid, spec.p);
                break;
            }
        }
    }
    return out;
}

// ---- backward ---------------------------------------------------------------

AggregateBackward aggregate_backward(const Matrix& emb, std::span<const std::uint8_t> mask,
                                     const AggregatorSpec& spec,
                                     std::span<const double> upstream) {
    spec.validate();
    const std::size_t n = emb.rows(), m = emb.cols();
    if (upstream.size() != m) {
        throw ShapeError("aggregate_backward: upstream length " +
                         std::to_string(upstream.size()) + " != " + std::to_string(m) +
                         " columns");
    }
    const std::vector<std::size_t> idx = valid_row_indices(n, mask);
    if (idx.empty()) throw DomainError("aggregate_backward: no valid rows");
    const auto nv = static_cast<double>(idx.size());

    std::vector<double> weights_valid;
    if (spec.kind == AggKind::WeightedPowerMean) {
        weights_valid.reserve(idx.size());
        for (std::size_t i : idx) weights_valid.push_back(spec.weights[i]);
    }

    AggregateBackward back;
    back.grad_emb = Matrix(n, m, 0.0);
    back.has_grad_p = spec.kind == AggKind::PowerMean;

    std::vector<double> col(idx.size());
    std::vector<double> log_col(idx.size());

    for (std::size_t j = 0; j < m; ++j) {
        const double u = upstream[j];
        for (std::size_t t = 0; t < idx.size(); ++t) col[t] = emb(idx[t], j);

        switch (spec.kind) {
            case AggKind::Sum:
                for (std::size_t t = 0; t < idx.size(); ++t) back.grad_emb(idx[t], j) = u;
                break;
            case AggKind::Mean:
                for (std::size_t t = 0; t < idx.size(); ++t) back.grad_emb(idx[t], j) = u / nv;
                break;
            case AggKind::Max: {
                std::size_t best = 0;
                for (std::size_t t = 1; t < col.size(); ++t)
                    if (col[t] > col[best]) best = t;
                back.grad_emb(idx[best], j) = u;
                break;
            }
            case AggKind::Min: {
                std::size_t best = 0;
                for (std::size_t t = 1; t < col.size(); ++t)
                    if (col[t] < col[best]) best = t;
                back.grad_emb(idx[best], j) = u;
                break;
            }
            case AggKind::LogSumExpMean: {
                const std::vector<double> w = power_softmax(col, 1.0);
                for (std::size_t t = 0; t < idx.size(); ++t)
                    back.grad_emb(idx[t], j) = u * w[t];
                break;
            }
            case AggKind::PowerMean: {
                for (std::size_t t = 0; t < col.size(); ++t) {
                    require_positive(col[t], idx[t], j, "aggregate_backward(power_mean)");
                    log_col[t] = std::log(col[t]);
                }
                const double p = spec.p;
                const double log_m = log_power_mean_from_logs(log_col, p);
                const double m_p = std::exp(log_m);
                if (std::abs(p) < kPowerMeanGeomEps) {
                    // Geometric branch: ∂M₀/∂xᵢ = M₀/(n·xᵢ); dM/dp → M₀·Var(ln x)/2.
                    for (std::size_t t = 0; t < idx.size(); ++t)
                        back.grad_emb(idx[t], j) = u * m_p / (nv * col[t]);
                    back.grad_p += u * m_p * variance_of(log_col) / 2.0;
                } else {
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        back.grad_emb(idx[t], j) =
                            u * std::exp((p - 1.0) * (log_col[t] - log_m)) / nv;
                    }
                    // dM/dp is exactly 0 on constant columns; short-circuit
                    // so cancellation residue cannot leak into the update.
                    if (!all_equal(log_col)) {
                        const std::vector<double> w = power_softmax(log_col, p);
                        double weighted_log = 0.0;
                        for (std::size_t t = 0; t < w.size(); ++t)
                            weighted_log += w[t] * log_col[t];
                        back.grad_p += u * (m_p / p) * (weighted_log - log_m);
                    }
                }
                break;
            }
            case AggKind::QuasiArithmetic: {
                switch (spec.map.kind) {
                    case MonotoneMapId::Kind::Identity:
                        for (std::size_t t = 0; t < idx.size(); ++t)
                            back.grad_emb(idx[t], j) = u / nv;
                        break;
                    case MonotoneMapId::Kind::Ln: {
                        for (std::size_t t = 0; t < col.size(); ++t) {
                            require_positive(col[t], idx[t], j,
                                             "aggregate_backward(quasi_arithmetic ln)");
                            log_col[t] = std::log(col[t]);
                        }
                        const double g_mean = std::exp(mean_of(log_col));
                        for (std::size_t t = 0; t < idx.size(); ++t)
                            back.grad_emb(idx[t], j) = u * g_mean / (nv * col[t]);
                        break;
                    }
                    case MonotoneMapId::Kind::Exp: {
                        const std::vector<double> w = power_softmax(col, 1.0);
                        for (std::size_t t = 0; t < idx.size(); ++t)
                            back.grad_emb(idx[t], j) = u * w[t];
                        break;
                    }
                    case MonotoneMapId::Kind::Power: {
                        for (std::size_t t = 0; t < col.size(); ++t) {
                            require_positive(col[t], idx[t], j,
                                             "aggregate_backward(quasi_arithmetic power)");
                            log_col[t] = std::log(col[t]);
                        }
                        const double q = spec.map.q;
                        const double log_m = log_power_mean_from_logs(log_col, q);
                        if (std::abs(q) < kPowerMeanGeomEps) {
                            const double m_q = std::exp(log_m);
                            for (std::size_t t = 0; t < idx.size(); ++t)
                                back.grad_emb(idx[t], j) = u * m_q / (nv * col[t]);
                        } else {
                            for (std::size_t t = 0; t < idx.size(); ++t) {
                                back.grad_emb(idx[t], j) =
                                    u * std::exp((q - 1.0) * (log_col[t] - log_m)) / nv;
                            }
                        }
                        break;
                    }
                }
                break;
            }
            case AggKind::WeightedPowerMean: {
                for (std::size_t t = 0; t < col.size(); ++t) {
                    require_positive(col[t], idx[t], j, "aggregate_backward(weighted_power_mean)");
                    log_col[t] = std::log(col[t]);
                }
                const double p = spec.p;
                if (std::abs(p) < kPowerMeanGeomEps) {
                    double log_m = 0.0;
                    for (std::size_t t = 0; t < idx.size(); ++t)
                        log_m += weights_valid[t] * log_col[t];
                    const double m_w = std::exp(log_m);
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        back.grad_emb(idx[t], j) =
                            weights_valid[t] > 0.0 ? u * m_w * weights_valid[t] / col[t] : 0.0;
                    }
                } else {
                    const double m_w = weighted_power_mean(col, weights_valid, p);
                    const double log_m = std::log(m_w);
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        back.grad_emb(idx[t], j) =
                            weights_valid[t] > 0.0
                                ? u * weights_valid[t] *
                                      std::exp((p - 1.0) * (log_col[t] - log_m))
                                : 0.0;
                    }
                }
                break;
            }
        }
    }
    return back;
}

// ---- scalar operations ------------------------------------------------------

double quasi_arithmetic_mean(std::span<const double> values, const MonotoneMapId& g) {
    if (values.empty()) throw DomainError("quasi_arithmetic_mean: empty input");
    // Literal g⁻¹(mean g(x)); the aggregate() path uses the stabilized
    // log-space evaluation, so the two form independent routes.
    double acc = 0.0;
    for (double x : values) acc += g.apply(x);
    return g.inverse(acc / static_cast<double>(values.size()));
}

double power_mean(std::span<const double> values, double p) {
    if (values.empty()) throw DomainError("power_mean: empty input");
    std::vector<double> log_x(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) {
            throw DomainError("power_mean: nonpositive entry at index " + std::to_string(i));
        }
        log_x[i] = std::log(values[i]);
    }
    return std::exp(log_power_mean_from_logs(log_x, p));
}

double weighted_power_mean(std::span<const double> values, std::span<const double> weights,
                           double p) {
    if (values.size() != weights.size()) {
        throw ValidationError("weighted_power_mean: " + std::to_string(values.size()) +
                              " values but " + std::to_string(weights.size()) + " weights");
    }
    if (values.empty()) throw DomainError("weighted_power_mean: empty input");
    double s = 0.0;
    std::size_t nonzero = 0, last_nonzero = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw ValidationError("weighted_power_mean: negative weight");
        if (weights[i] > 0.0) {
            ++nonzero;
            last_nonzero = i;
        }
        s += weights[i];
    }
    if (std::abs(s - 1.0) > 1e-9) {
        throw ValidationError("weighted_power_mean: weights sum to " + std::to_string(s) +
                              ", off the simplex");
    }
    // Degenerate simplex: all mass on one value, exact for any p.
    if (nonzero == 1) {
        const double x = values[last_nonzero];
        if (!(x > 0.0)) {
            throw DomainError("weighted_power_mean: nonpositive entry at index " +
                              std::to_string(last_nonzero));
        }
        return x;
    }

    std::vector<double> terms;
    terms.reserve(nonzero);
    if (std::abs(p) < kPowerMeanGeomEps) {
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (weights[i] == 0.0) continue;
            if (!(values[i] > 0.0)) {
                throw DomainError("weighted_power_mean: nonpositive entry at index " +
                                  std::to_string(i));
            }
            acc += weights[i] * std::log(values[i]);
        }
        return std::exp(acc);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] == 0.0) continue;
        if (!(values[i] > 0.0)) {
            throw DomainError("weighted_power_mean: nonpositive entry at index " +
                              std::to_string(i));
        }
        terms.push_back(std::log(weights[i]) + p * std::log(values[i]));
    }
    return std::exp(logsumexp(terms) / p);
}

double sum_isomorphism_aggregate(std::span<const double> values, const MonotoneMapId& g) {
    if (values.empty()) throw DomainError("sum_isomorphism_aggregate: empty input");
    if (g.kind == MonotoneMapId::Kind::Ln) {
        return logsumexp(values);  // ln(Σ exp(xᵢ)), max-shifted
    }
    double acc = 0.0;
    for (double x : values) acc += g.inverse(x);
    return g.apply(acc);
}

}  // namespace setfunc
