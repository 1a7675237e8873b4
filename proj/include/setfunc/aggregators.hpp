#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "setfunc/matrix.hpp"

namespace setfunc {

/// Below this |p| the power mean switches to its geometric-mean limit; the
/// two branches agree to ~1e-8 at the boundary.
inline constexpr double kPowerMeanGeomEps = 1e-4;

/// Strictly monotone map g with evaluable inverse, used by quasi-arithmetic
/// means g⁻¹(mean g(x)) and by sum-isomorphism aggregation g(Σ g⁻¹(x)).
struct MonotoneMapId {
    enum class Kind { Identity, Ln, Exp, Power };

    Kind kind = Kind::Identity;
    double q = 1.0;  // exponent for Kind::Power

    double apply(double x) const;
    double inverse(double y) const;
    /// First derivative g'(x), used by aggregation backward passes.
    double slope(double x) const;
    bool requires_positive() const;
    std::string name() const;

    static MonotoneMapId identity() { return {Kind::Identity, 1.0}; }
    static MonotoneMapId ln() { return {Kind::Ln, 1.0}; }
    static MonotoneMapId exp() { return {Kind::Exp, 1.0}; }
    static MonotoneMapId power(double q) { return {Kind::Power, q}; }
};

enum class AggKind : std::uint8_t {
    Sum,
    Mean,
    Max,
    Min,
    LogSumExpMean,
    PowerMean,
    QuasiArithmetic,
    WeightedPowerMean,
};

std::string agg_kind_name(AggKind kind);

/// Names the aggregation rule applied per latent dimension, plus its
/// parameters. PowerMean carries the exponent p (optionally trainable);
/// WeightedPowerMean additionally carries per-row simplex weights.
struct AggregatorSpec {
    AggKind kind = AggKind::Mean;
    double p = 1.0;
    bool learnable = false;
    MonotoneMapId map = MonotoneMapId::identity();
    std::vector<double> weights;

    static AggregatorSpec of(AggKind k) {
        AggregatorSpec s;
        s.kind = k;
        return s;
    }
    static AggregatorSpec sum() { return of(AggKind::Sum); }
    static AggregatorSpec mean() { return of(AggKind::Mean); }
    static AggregatorSpec max() { return of(AggKind::Max); }
    static AggregatorSpec min() { return of(AggKind::Min); }
    static AggregatorSpec logsumexp_mean() { return of(AggKind::LogSumExpMean); }
    static AggregatorSpec power_mean(double p, bool learnable = false) {
        AggregatorSpec s = of(AggKind::PowerMean);
        s.p = p;
        s.learnable = learnable;
        return s;
    }
    static AggregatorSpec quasi_arithmetic(MonotoneMapId g) {
        AggregatorSpec s = of(AggKind::QuasiArithmetic);
        s.map = g;
        return s;
    }
    static AggregatorSpec weighted_power_mean(double p, std::vector<double> weights) {
        AggregatorSpec s = of(AggKind::WeightedPowerMean);
        s.p = p;
        s.weights = std::move(weights);
        return s;
    }

    bool requires_positive_inputs() const;
    bool has_learnable_p() const { return kind == AggKind::PowerMean && learnable; }
    /// Throws ValidationError / ConfigError on malformed parameters.
    void validate() const;
};

/// Per-dimension reduction of the valid rows of emb. mask may be empty
/// (all rows valid) or hold one 0/1 flag per row. Returns one value per
/// column.
std::vector<double> aggregate(const Matrix& emb, std::span<const std::uint8_t> mask,
                              const AggregatorSpec& spec);

struct AggregateBackward {
    Matrix grad_emb;           // n×m; zero rows for masked elements
    double grad_p = 0.0;       // ∂(upstream·out)/∂p, PowerMean only
    bool has_grad_p = false;
};

/// Gradients of upstreamᵀ·aggregate(emb) with respect to emb (and p for
/// PowerMean). Max/Min route the subgradient to the lowest-index argmax row.
AggregateBackward aggregate_backward(const Matrix& emb, std::span<const std::uint8_t> mask,
                                     const AggregatorSpec& spec,
                                     std::span<const double> upstream);

/// g⁻¹(mean(g(values))).
double quasi_arithmetic_mean(std::span<const double> values, const MonotoneMapId& g);

/// (Σ wᵢ·xᵢᵖ)^(1/p) with the geometric-limit branch for |p| < eps; weights
/// must lie on the simplex within 1e-9.
double weighted_power_mean(std::span<const double> values, std::span<const double> weights,
                           double p);

/// Scalar power mean (Σ xᵢᵖ / n)^(1/p) with the stable log-space
/// evaluation and the geometric branch at |p| < kPowerMeanGeomEps.
double power_mean(std::span<const double> values, double p);

/// g(Σ g⁻¹(xᵢ)): summation in the space mapped out by g. For g = ln this
/// is exactly logsumexp and is evaluated with the max-shift.
double sum_isomorphism_aggregate(std::span<const double> values, const MonotoneMapId& g);

}  // namespace setfunc
