#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "setfunc/aggregators.hpp"
#include "setfunc/errors.hpp"
#include "setfunc/kernels.hpp"
#include "setfunc/matrix.hpp"
#include "setfunc/rng.hpp"

using namespace setfunc;

namespace {

Matrix column(std::initializer_list<double> vals) {
    Matrix m(vals.size(), 1);
    std::size_t i = 0;
    for (double v : vals) m(i++, 0) = v;
    return m;
}

Matrix random_positive(std::size_t r, std::size_t c, Rng& rng, double lo = 0.5, double hi = 2.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

double objective(const Matrix& emb, const AggregatorSpec& spec,
                 const std::vector<double>& upstream) {
    const std::vector<double> out = aggregate(emb, {}, spec);
    double acc = 0.0;
    for (std::size_t j = 0; j < out.size(); ++j) acc += upstream[j] * out[j];
    return acc;
}

double rel_err(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central finite differences of upstreamᵀ·aggregate through every emb entry
// and (for power means) through p. Returns the max relative error vs the
// analytic backward.
double max_fd_error(const Matrix& emb, AggregatorSpec spec, const std::vector<double>& upstream,
                    double h, double floor) {
    const AggregateBackward back = aggregate_backward(emb, {}, spec, upstream);
    double worst = 0.0;
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        for (std::size_t c = 0; c < emb.cols(); ++c) {
            Matrix plus = emb, minus = emb;
            plus(r, c) += h;
            minus(r, c) -= h;
            const double fd = (objective(plus, spec, upstream) - objective(minus, spec, upstream)) /
                              (2.0 * h);
            worst = std::max(worst, rel_err(back.grad_emb(r, c), fd, floor));
        }
    }
    if (back.has_grad_p) {
        // Inside the geometric branch the analytic grad_p is the p→0 limit,
        // so center the difference at 0 and step over the plateau; outside,
        // difference around p as usual.
        const bool geom = std::abs(spec.p) < kPowerMeanGeomEps;
        const double center = geom ? 0.0 : spec.p;
        const double hp = geom ? 1e-3 : h;
        AggregatorSpec plus = spec, minus = spec;
        plus.p = center + hp;
        minus.p = center - hp;
        const double fd = (objective(emb, plus, upstream) - objective(emb, minus, upstream)) /
                          (2.0 * hp);
        worst = std::max(worst, rel_err(back.grad_p, fd, floor));
    }
    return worst;
}

}  // namespace

TEST(Aggregate, ConstantRowsAreFixedPoints) {
    Matrix emb(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        emb(i, 0) = 0.8;
        emb(i, 1) = 1.6;
        emb(i, 2) = 2.4;
    }
    for (const auto& spec :
         {AggregatorSpec::mean(), AggregatorSpec::max(), AggregatorSpec::min(),
          AggregatorSpec::power_mean(-3.0), AggregatorSpec::power_mean(0.0),
          AggregatorSpec::power_mean(7.5)}) {
        const auto out = aggregate(emb, {}, spec);
        EXPECT_NEAR(out[0], 0.8, 1e-12);
        EXPECT_NEAR(out[1], 1.6, 1e-12);
        EXPECT_NEAR(out[2], 2.4, 1e-12);
    }
}

TEST(Aggregate, HarmonicMeanSpecialCase) {
    const auto out = aggregate(column({1.0, 4.0, 4.0}), {}, AggregatorSpec::power_mean(-1.0));
    EXPECT_NEAR(out[0], 2.0, 1e-12);
}

TEST(Aggregate, GeometricMeanBranch) {
    const auto out = aggregate(column({1.0, 4.0, 16.0}), {}, AggregatorSpec::power_mean(0.0));
    EXPECT_NEAR(out[0], 4.0, 1e-12);
}

TEST(Aggregate, LargePApproachesMax) {
    const auto out = aggregate(column({1.0, 5.0, 3.0}), {}, AggregatorSpec::power_mean(200.0));
    // Gap bound: max·(n^(1/p) − 1) relative to max.
    EXPECT_LT(std::abs(out[0] - 5.0) / 5.0, 1e-2);
    EXPECT_LE(out[0], 5.0 + 1e-12);
    EXPECT_GE(out[0], 5.0 * std::pow(3.0, -1.0 / 200.0) - 1e-12);
}

TEST(Aggregate, MaskExcludesRows) {
    const Matrix emb = column({1.0, 100.0, 3.0});
    const std::vector<std::uint8_t> mask{1, 0, 1};
    EXPECT_DOUBLE_EQ(aggregate(emb, mask, AggregatorSpec::max())[0], 3.0);
    EXPECT_DOUBLE_EQ(aggregate(emb, mask, AggregatorSpec::mean())[0], 2.0);
    EXPECT_DOUBLE_EQ(aggregate(emb, mask, AggregatorSpec::sum())[0], 4.0);
}

TEST(Aggregate, NoValidRowsIsDomainError) {
    const Matrix emb = column({1.0, 2.0});
    const std::vector<std::uint8_t> mask{0, 0};
    EXPECT_THROW(aggregate(emb, mask, AggregatorSpec::mean()), DomainError);
}

TEST(Aggregate, NonpositiveEntryNamesOffendingIndex) {
    Matrix emb(3, 2, 1.0);
    emb(2, 1) = -0.5;
    try {
        aggregate(emb, {}, AggregatorSpec::power_mean(2.0));
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos);
        EXPECT_NE(msg.find("column 1"), std::string::npos);
    }
}

TEST(Aggregate, PermutationInvariance) {
    Rng rng(21);
    std::vector<AggregatorSpec> specs = {
        AggregatorSpec::sum(),          AggregatorSpec::mean(),
        AggregatorSpec::max(),          AggregatorSpec::min(),
        AggregatorSpec::logsumexp_mean(), AggregatorSpec::power_mean(2.7),
        AggregatorSpec::power_mean(-4.1), AggregatorSpec::power_mean(0.0),
        AggregatorSpec::quasi_arithmetic(MonotoneMapId::ln()),
        AggregatorSpec::quasi_arithmetic(MonotoneMapId::exp()),
    };
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(6), m = 1 + rng.below(4);
        const Matrix emb = random_positive(n, m, rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        Matrix shuffled(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) shuffled(i, j) = emb(perm[i], j);

        for (const auto& spec : specs) {
            const auto a = aggregate(emb, {}, spec);
            const auto b = aggregate(shuffled, {}, spec);
            for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
        }
    }
}

TEST(Aggregate, PowerMeanMonotoneInP) {
    Rng rng(33);
    const std::vector<double> ps{-8.0, -4.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        Matrix emb(n, 1);
        for (std::size_t i = 0; i < n; ++i) emb(i, 0) = rng.uniform(0.2, 3.0);
        // Skip the (measure-zero) constant case; monotonicity is strict
        // only for non-constant inputs.
        bool constant = true;
        for (std::size_t i = 1; i < n; ++i) constant &= emb(i, 0) == emb(0, 0);
        if (constant) continue;

        double prev = -1.0;
        for (double p : ps) {
            const double mp = aggregate(emb, {}, AggregatorSpec::power_mean(p))[0];
            if (prev >= 0.0) {
                EXPECT_GT(mp, prev);
            }
            prev = mp;
        }
    }
}

TEST(Aggregate, LimitConsistencyBounds) {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        Matrix emb(n, 1);
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            emb(i, 0) = rng.uniform(0.5, 2.0);
            mx = std::max(mx, emb(i, 0));
        }
        for (double p : {1.0, 2.0, 8.0, 32.0, 128.0}) {
            const double mp = aggregate(emb, {}, AggregatorSpec::power_mean(p))[0];
            const double bound = mx * (std::pow(static_cast<double>(n), 1.0 / p) - 1.0);
            EXPECT_LE(mx - mp, bound + 1e-12);
            EXPECT_LE(mp, mx + 1e-12);
        }
    }
}

TEST(Aggregate, GeometricBranchContinuity) {
    // Values drawn close to 1 keep Var(ln x) small, so crossing the branch
    // point moves the value by |p|·Var(ln x)/2 ≈ 5e-6 relative at most.
    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        Matrix emb(n, 1);
        for (std::size_t i = 0; i < n; ++i) emb(i, 0) = rng.uniform(0.85, 1.2);
        const double geo = aggregate(emb, {}, AggregatorSpec::power_mean(0.0))[0];
        for (double p : {1e-3, -1e-3}) {
            const double mp = aggregate(emb, {}, AggregatorSpec::power_mean(p))[0];
            EXPECT_LT(std::abs(mp - geo) / geo, 1e-5);
        }
    }
}

TEST(SumIsomorphism, LnEqualsLogSumExp) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(-4.0, 4.0);
        const double composed = sum_isomorphism_aggregate(v, MonotoneMapId::ln());
        EXPECT_NEAR(composed, logsumexp(v), 1e-10);
    }
}

TEST(SumIsomorphism, IdentityIsPlainSum) {
    const std::vector<double> v{0.5, 1.5, -2.0};
    EXPECT_DOUBLE_EQ(sum_isomorphism_aggregate(v, MonotoneMapId::identity()), 0.0);
}

TEST(QuasiArithmeticMean, IdentityIsArithmetic) {
    const std::vector<double> v{2.0, 4.0};
    EXPECT_DOUBLE_EQ(quasi_arithmetic_mean(v, MonotoneMapId::identity()), 3.0);
}

TEST(QuasiArithmeticMean, LnIsGeometric) {
    const std::vector<double> v{1.0, 4.0, 16.0};
    EXPECT_NEAR(quasi_arithmetic_mean(v, MonotoneMapId::ln()), 4.0, 1e-12);
}

TEST(QuasiArithmeticMean, PowerMapMatchesPowerMean) {
    // Two independent routes: the literal g⁻¹(mean g(x)) against the
    // log-space power mean.
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(0.3, 2.5);
        const double p = rng.uniform(-4.0, 4.0);
        if (std::abs(p) < 0.05) continue;
        const double lhs = quasi_arithmetic_mean(v, MonotoneMapId::power(p));
        const double rhs = power_mean(v, p);
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, rhs));
    }
}

TEST(QuasiArithmeticMean, DomainViolation) {
    const std::vector<double> v{1.0, -2.0};
    EXPECT_THROW(quasi_arithmetic_mean(v, MonotoneMapId::ln()), DomainError);
}

TEST(WeightedPowerMean, UniformWeightsReproducePowerMean) {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        std::vector<double> v(n), w(n, 1.0 / static_cast<double>(n));
        for (auto& x : v) x = rng.uniform(0.3, 2.5);
        const double p = rng.uniform(-5.0, 5.0);
        const double lhs = weighted_power_mean(v, w, p);
        const double rhs = power_mean(v, p);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
    }
}

TEST(WeightedPowerMean, OneHotIsExact) {
    const std::vector<double> v{0.7, 1.3, 2.9};
    for (double p : {-8.0, -1.0, 0.0, 1.0, 3.0, 42.0}) {
        const std::vector<double> w{0.0, 1.0, 0.0};
        EXPECT_EQ(weighted_power_mean(v, w, p), 1.3);
    }
}

TEST(WeightedPowerMean, ConstantsAreFixedPoints) {
    const std::vector<double> v{2.0, 2.0};
    const std::vector<double> w{0.25, 0.75};
    EXPECT_NEAR(weighted_power_mean(v, w, 3.0), 2.0, 1e-12);
}

TEST(WeightedPowerMean, OffSimplexRejected) {
    const std::vector<double> v{1.0, 2.0};
    const std::vector<double> w{0.6, 0.6};
    EXPECT_THROW(weighted_power_mean(v, w, 2.0), ValidationError);
    const std::vector<double> neg{1.2, -0.2};
    EXPECT_THROW(weighted_power_mean(v, neg, 2.0), ValidationError);
}

TEST(AggregateBackward, MeanGradIsUniform) {
    Rng rng(41);
    const Matrix emb = random_positive(5, 3, rng);
    const std::vector<double> upstream{1.0, -2.0, 0.5};
    const auto back = aggregate_backward(emb, {}, AggregatorSpec::power_mean(1.0), upstream);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(back.grad_emb(i, j), upstream[j] / 5.0, 1e-12);
}

TEST(AggregateBackward, ConstantInputsHaveZeroGradP) {
    Matrix emb(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        emb(i, 0) = 1.7;
        emb(i, 1) = 0.4;
    }
    const std::vector<double> upstream{1.0, 1.0};
    for (double p : {-6.0, -1.0, 0.0, 1.0, 2.5, 9.0}) {
        const auto back = aggregate_backward(emb, {}, AggregatorSpec::power_mean(p), upstream);
        ASSERT_TRUE(back.has_grad_p);
        EXPECT_NEAR(back.grad_p, 0.0, 1e-10);
    }
}

TEST(AggregateBackward, FiniteDifferenceOracle4x3) {
    Rng rng(55);
    const Matrix emb = random_positive(4, 3, rng);
    const std::vector<double> upstream{0.7, -1.1, 0.4};
    const double worst = max_fd_error(emb, AggregatorSpec::power_mean(1.7), upstream, 1e-5, 1e-3);
    EXPECT_LT(worst, 1e-6);
}

TEST(AggregateBackward, FiniteDifferenceSweepAllKinds) {
    Rng rng(66);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(5), m = 1 + rng.below(3);
        const Matrix emb = random_positive(n, m, rng);
        std::vector<double> upstream(m);
        for (auto& u : upstream) u = rng.uniform(-1.0, 1.0);

        std::vector<AggregatorSpec> specs = {
            AggregatorSpec::sum(),
            AggregatorSpec::mean(),
            AggregatorSpec::logsumexp_mean(),
            AggregatorSpec::power_mean(rng.uniform(-6.0, 6.0)),
            AggregatorSpec::quasi_arithmetic(MonotoneMapId::ln()),
            AggregatorSpec::quasi_arithmetic(MonotoneMapId::exp()),
            AggregatorSpec::quasi_arithmetic(MonotoneMapId::power(1.9)),
        };
        // Force the geometric branch into the sweep.
        if (trial % 5 == 0) specs.push_back(AggregatorSpec::power_mean(0.0));
        if (trial % 5 == 1) specs.push_back(AggregatorSpec::power_mean(5e-5));
        {
            std::vector<double> w(n);
            double s = 0.0;
            for (auto& x : w) {
                x = rng.uniform(0.1, 1.0);
                s += x;
            }
            for (auto& x : w) x /= s;
            specs.push_back(AggregatorSpec::weighted_power_mean(rng.uniform(-4.0, 4.0), w));
        }
        for (const auto& spec : specs)
            worst = std::max(worst, max_fd_error(emb, spec, upstream, 1e-5, 1e-3));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(AggregateBackward, MaxRoutesToLowestArgmaxIndex) {
    Matrix emb(4, 1);
    emb(0, 0) = 1.0;
    emb(1, 0) = 3.0;
    emb(2, 0) = 3.0;  // exact tie with row 1
    emb(3, 0) = 0.5;
    const std::vector<double> upstream{2.0};
    const auto back = aggregate_backward(emb, {}, AggregatorSpec::max(), upstream);
    EXPECT_DOUBLE_EQ(back.grad_emb(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(back.grad_emb(2, 0), 0.0);

    const auto bmin = aggregate_backward(emb, {}, AggregatorSpec::min(), upstream);
    EXPECT_DOUBLE_EQ(bmin.grad_emb(3, 0), 2.0);
}

TEST(AggregateBackward, MaskedRowsGetZeroGrad) {
    Rng rng(71);
    const Matrix emb = random_positive(4, 2, rng);
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    const std::vector<double> upstream{1.0, 1.0};
    const auto back = aggregate_backward(emb, mask, AggregatorSpec::power_mean(2.0), upstream);
    EXPECT_DOUBLE_EQ(back.grad_emb(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(back.grad_emb(1, 1), 0.0);
}
