#include "setfunc/janossy.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "setfunc/errors.hpp"

namespace setfunc {

namespace {

constexpr std::uint64_t kTupleBudget = 1'000'000;
constexpr std::size_t kFullEnumerationCap = 8;

std::uint64_t factorial(std::uint64_t n) {
    std::uint64_t f = 1;
    for (std::uint64_t i = 2; i <= n; ++i) f *= i;
    return f;
}

// idx-th permutation of {0..n-1} in lexicographic order (factorial number
// system), giving random access for parallel enumeration.
void decode_permutation(std::uint64_t idx, std::size_t n, std::vector<std::size_t>& out) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    out.clear();
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t base = factorial(n - 1 - j);
        const auto d = static_cast<std::size_t>(idx / base);
        idx %= base;
        out.push_back(pool[d]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(d));
    }
}

// idx-th ordered k-tuple of distinct elements of {0..n-1}.
void decode_k_tuple(std::uint64_t idx, std::size_t n, std::size_t k,
                    std::vector<std::size_t>& out) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    out.clear();
    for (std::size_t j = 0; j < k; ++j) {
        const std::uint64_t base = falling_factorial(n - 1 - j, k - 1 - j);
        const auto d = static_cast<std::size_t>(idx / base);
        idx %= base;
        out.push_back(pool[d]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(d));
    }
}

Matrix gather_tuple(const Matrix& set, const std::vector<std::size_t>& order) {
    Matrix tuple(order.size(), set.cols());
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t c = 0; c < set.cols(); ++c) tuple(i, c) = set(order[i], c);
    return tuple;
}

void check_fn(const PermSensitiveFn& fn, const Matrix& set, std::size_t expected_arity,
              const char* op) {
    if (!fn.fn) throw ContractError(std::string(op) + ": empty callable");
    if (fn.element_dim != set.cols()) {
        throw ShapeError(std::string(op) + ": fn expects element dim " +
                         std::to_string(fn.element_dim) + ", set has " +
                         std::to_string(set.cols()));
    }
    if (fn.arity != expected_arity) {
        throw ShapeError(std::string(op) + ": fn arity " + std::to_string(fn.arity) +
                         " != tuple length " + std::to_string(expected_arity));
    }
}

}  // namespace

PermSensitiveFn PermSensitiveFn::from_mlp(std::shared_ptr<const Mlp> mlp, std::size_t arity,
                                          std::size_t element_dim) {
    if (mlp->spec.input_width() != arity * element_dim) {
        throw ConfigError("PermSensitiveFn: mlp input width " +
                          std::to_string(mlp->spec.input_width()) + " != arity*dim = " +
                          std::to_string(arity * element_dim));
    }
    PermSensitiveFn f;
    f.arity = arity;
    f.element_dim = element_dim;
    f.out_dim = mlp->spec.output_width();
    f.fn = [mlp](const Matrix& tuple, double* out) {
        Matrix flat(1, tuple.size());
        std::copy(tuple.data().begin(), tuple.data().end(), flat.data().begin());
        const Matrix y = mlp_forward(*mlp, flat, nullptr);
        std::copy(y.data().begin(), y.data().end(), out);
    };
    return f;
}

std::vector<double> PermSensitiveFn::operator()(const Matrix& tuple) const {
    std::vector<double> out(out_dim);
    fn(tuple, out.data());
    return out;
}

void JanossyStrategy::validate() const {
    if (kind == Kind::KAry && k < 1) throw ConfigError("JanossyStrategy: k must be >= 1");
    if (kind == Kind::Sampled && num < 1) throw ConfigError("JanossyStrategy: num must be >= 1");
}

std::uint64_t falling_factorial(std::uint64_t n, std::uint64_t k) {
    std::uint64_t f = 1;
    for (std::uint64_t i = 0; i < k; ++i) f *= n - i;
    return f;
}

std::vector<double> janossy_full(const PermSensitiveFn& fn, const Matrix& set, Exec exec) {
    const std::size_t n = set.rows();
    if (n == 0) throw DomainError("janossy_full: empty set");
    if (n > kFullEnumerationCap) {
        throw ResourceError("janossy_full: |S| = " + std::to_string(n) +
                            " exceeds the |S|! enumeration cap of " +
                            std::to_string(kFullEnumerationCap));
    }
    check_fn(fn, set, n, "janossy_full");

    const std::uint64_t count = factorial(n);
    std::vector<double> acc;
    tree_sum_vectors(
        count, fn.out_dim,
        [&](std::size_t idx, double* out) {
            std::vector<std::size_t> order;
            decode_permutation(idx, n, order);
            fn.fn(gather_tuple(set, order), out);
        },
        acc, exec);
    for (double& v : acc) v /= static_cast<double>(count);
    return acc;
}

std::vector<double> janossy_full(const PermSensitiveFn& fn, const Matrix& set) {
    return janossy_full(fn, set, default_exec());
}

std::vector<double> janossy_k(const PermSensitiveFn& fn, const Matrix& set, std::size_t k,
                              Exec exec) {
    const std::size_t n = set.rows();
    if (k < 1) throw DomainError("janossy_k: k must be >= 1");
    if (k > n) {
        throw DomainError("janossy_k: k = " + std::to_string(k) + " exceeds |S| = " +
                          std::to_string(n));
    }
    check_fn(fn, set, k, "janossy_k");

    const std::uint64_t tau = falling_factorial(n, k);
    if (tau > kTupleBudget) {
        throw ResourceError("janossy_k: " + std::to_string(tau) +
                            " ordered tuples exceed the budget of " +
                            std::to_string(kTupleBudget));
    }

    std::vector<double> acc;
    tree_sum_vectors(
        tau, fn.out_dim,
        [&](std::size_t idx, double* out) {
            std::vector<std::size_t> order;
            decode_k_tuple(idx, n, k, order);
            fn.fn(gather_tuple(set, order), out);
        },
        acc, exec);
    for (double& v : acc) v /= static_cast<double>(tau);
    return acc;
}

std::vector<double> janossy_k(const PermSensitiveFn& fn, const Matrix& set, std::size_t k) {
    return janossy_k(fn, set, k, default_exec());
}

std::vector<double> janossy_sorted(const PermSensitiveFn& fn, const Matrix& set,
                                   std::size_t key_dim) {
    const std::size_t n = set.rows();
    if (n == 0) throw DomainError("janossy_sorted: empty set");
    if (key_dim >= set.cols()) {
        throw DomainError("janossy_sorted: key_dim " + std::to_string(key_dim) +
                          " out of range for dim " + std::to_string(set.cols()));
    }
    check_fn(fn, set, n, "janossy_sorted");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (set(a, key_dim) != set(b, key_dim)) return set(a, key_dim) < set(b, key_dim);
        for (std::size_t c = 0; c < set.cols(); ++c) {
            if (set(a, c) != set(b, c)) return set(a, c) < set(b, c);
        }
        return a < b;
    });
    return fn(gather_tuple(set, order));
}

std::vector<double> janossy_sampled(const PermSensitiveFn& fn, const Matrix& set, std::size_t num,
                                    Rng& rng) {
    const std::size_t n = set.rows();
    if (n == 0) throw DomainError("janossy_sampled: empty set");
    if (num < 1) throw DomainError("janossy_sampled: num must be >= 1");
    check_fn(fn, set, n, "janossy_sampled");

    // Draw all orderings up front (the rng is inherently sequential), then
    // evaluate them with the deterministic chunked reduction.
    std::vector<std::size_t> orders(num * n);
    std::vector<std::size_t> scratch(n);
    for (std::size_t s = 0; s < num; ++s) {
        std::iota(scratch.begin(), scratch.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i)
            std::swap(scratch[i - 1], scratch[rng.below(i)]);
        std::copy(scratch.begin(), scratch.end(), orders.begin() + static_cast<std::ptrdiff_t>(s * n));
    }

    std::vector<double> acc;
    tree_sum_vectors(
        num, fn.out_dim,
        [&](std::size_t s, double* out) {
            std::vector<std::size_t> order(orders.begin() + static_cast<std::ptrdiff_t>(s * n),
                                           orders.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
            fn.fn(gather_tuple(set, order), out);
        },
        acc, default_exec());
    for (double& v : acc) v /= static_cast<double>(num);
    return acc;
}

std::vector<double> janossy_apply(const PermSensitiveFn& fn, const Matrix& set,
                                  const JanossyStrategy& strategy, Rng& rng) {
    strategy.validate();
    switch (strategy.kind) {
        case JanossyStrategy::Kind::Full: return janossy_full(fn, set);
        case JanossyStrategy::Kind::KAry: return janossy_k(fn, set, strategy.k);
        case JanossyStrategy::Kind::Sorted: return janossy_sorted(fn, set, strategy.key_dim);
        case JanossyStrategy::Kind::Sampled: return janossy_sampled(fn, set, strategy.num, rng);
    }
    throw ContractError("janossy_apply: unknown strategy");
}

}  // namespace setfunc
