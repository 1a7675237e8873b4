#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "setfunc/kernels.hpp"
#include "setfunc/matrix.hpp"
#include "setfunc/mlp.hpp"
#include "setfunc/rng.hpp"

namespace setfunc {

/// Permutation-sensitive function over an ordered tuple of elements. The
/// callable receives the tuple as an arity×d matrix (rows in tuple order)
/// and writes out_dim values. Callables must be pure: tuple enumeration
/// evaluates them concurrently.
struct PermSensitiveFn {
    std::size_t arity = 0;
    std::size_t element_dim = 0;
    std::size_t out_dim = 0;
    std::function<void(const Matrix& tuple, double* out)> fn;

    /// Small MLP over the concatenation of the tuple's rows; the spec's
    /// input width must equal arity·element_dim.
    static PermSensitiveFn from_mlp(std::shared_ptr<const Mlp> mlp, std::size_t arity,
                                    std::size_t element_dim);

    std::vector<double> operator()(const Matrix& tuple) const;
};

struct JanossyStrategy {
    enum class Kind { Full, KAry, Sorted, Sampled };

    Kind kind = Kind::Full;
    std::size_t k = 2;        // KAry
    std::size_t key_dim = 0;  // Sorted
    std::size_t num = 128;    // Sampled

    void validate() const;
};

/// τ(n, k) = n!/(n−k)!: the number of ordered k-tuples of distinct
/// elements.
std::uint64_t falling_factorial(std::uint64_t n, std::uint64_t k);

/// Average of fn over all |S|! orderings; |S| ≤ 8.
std::vector<double> janossy_full(const PermSensitiveFn& fn, const Matrix& set, Exec exec);
std::vector<double> janossy_full(const PermSensitiveFn& fn, const Matrix& set);

/// Average of fn over all τ(|S|, k) ordered k-tuples of distinct elements.
std::vector<double> janossy_k(const PermSensitiveFn& fn, const Matrix& set, std::size_t k,
                              Exec exec);
std::vector<double> janossy_k(const PermSensitiveFn& fn, const Matrix& set, std::size_t k);

/// fn applied once to the canonical ordering: ascending by coordinate
/// key_dim, ties broken lexicographically over all coordinates, then by
/// original index.
std::vector<double> janossy_sorted(const PermSensitiveFn& fn, const Matrix& set,
                                   std::size_t key_dim);

/// Average of fn over num uniformly drawn orderings; deterministic given
/// the rng state.
std::vector<double> janossy_sampled(const PermSensitiveFn& fn, const Matrix& set, std::size_t num,
                                    Rng& rng);

std::vector<double> janossy_apply(const PermSensitiveFn& fn, const Matrix& set,
                                  const JanossyStrategy& strategy, Rng& rng);

}  // namespace setfunc
