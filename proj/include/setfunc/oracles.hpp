#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "setfunc/aggregators.hpp"
#include "setfunc/set_model.hpp"

namespace setfunc {

/// Outcome of one executable property check. passed ⇔ worst_violation ≤
/// tolerance; witness carries a serialized counterexample when one exists.
struct CheckReport {
    std::string name;
    bool passed = false;
    double worst_violation = 0.0;
    double tolerance = 0.0;
    std::string witness;

    nlohmann::json to_json() const;
};

/// A set-to-vector map under test (the model's forward, or a deliberately
/// order-sensitive probe).
using SetVectorFn = std::function<std::vector<double>(const Matrix&)>;

/// Max over sets and permutations of |f(S) − f(πS)|∞; all permutations are
/// enumerated when |S| ≤ 6, otherwise n_perms are sampled.
CheckReport check_permutation_invariance_fn(const SetVectorFn& f,
                                            const std::vector<Matrix>& sets, std::size_t n_perms,
                                            double tol, Rng& rng);
CheckReport check_permutation_invariance(const SetModel& model, const std::vector<Matrix>& sets,
                                         std::size_t n_perms, double tol, Rng& rng);

/// Scalar set function over a ground set, addressed by element bitmask.
/// Mask 0 is the empty set; model-backed functions fix f(∅) = 0.
using MaskSetFunction = std::function<double(std::uint32_t)>;

/// Memoized powerset table of a scalar-output model.
MaskSetFunction powerset_function(const SetModel& model, const Matrix& ground);

/// Max over all non-empty S, T of |f(S)+f(T) − f(S∪T) − f(S∩T)|.
CheckReport check_modularity(const MaskSetFunction& f, std::size_t ground_size, double tol);

/// Min over all non-empty S, T of f(S)+f(T) − f(S∪T) − f(S∩T); passes iff
/// the slack never drops below −tol.
CheckReport check_submodularity(const MaskSetFunction& f, std::size_t ground_size, double tol);

/// Central finite differences over every parameter (including p) against
/// model_backward, h ∈ [1e-7, 1e-3]. For max/min aggregation, exact ties
/// between distinct elements are excluded and reported as skipped
/// coordinates in the witness.
CheckReport grad_check(const SetModel& model, const SetBatch& batch, double h, double tol);

/// Verifies g(Σ g⁻¹(xᵢ)) against a naive direct evaluation on each sample
/// (logsumexp equality when g = ln) and the inverse round-trip
/// g(g⁻¹(y)) = y on 10³ generated points.
CheckReport check_sum_isomorphism(const MonotoneMapId& g,
                                  const std::vector<std::vector<double>>& samples, double tol,
                                  Rng& rng);

}  // namespace setfunc
