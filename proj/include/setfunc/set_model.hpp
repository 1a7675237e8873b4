#pragma once

#include <cstdint>
#include <vector>

#include "setfunc/aggregators.hpp"
#include "setfunc/mlp.hpp"

namespace setfunc {

/// Variable-size sets packed back to back: set i owns element rows
/// [offsets[i], offsets[i+1]). Regression targets or class labels, one per
/// set, depending on the task.
struct SetBatch {
    Matrix elements;                    // (Σ nᵢ) × d
    std::vector<std::size_t> offsets;   // B+1 entries, strictly increasing
    std::vector<double> targets;        // regression, size B (or empty)
    std::vector<int> labels;            // classification, size B (or empty)

    std::size_t num_sets() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t set_size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
    std::size_t dim() const { return elements.cols(); }

    void validate() const;
    /// Gathers the given sets (by index, in order) into a fresh packed batch.
    SetBatch gather(const std::vector<std::size_t>& set_indices) const;
};

/// The permutation-invariant predictor f(S) = ρ(aggregate(φ(s₁),…,φ(sₙ))).
/// When agg is a learnable power mean, agg.p is the extra trainable scalar.
struct SetModel {
    Mlp phi;
    AggregatorSpec agg;
    Mlp rho;

    std::size_t input_dim() const { return phi.spec.input_width(); }
    std::size_t latent_dim() const { return phi.spec.output_width(); }
    std::size_t output_dim() const { return rho.spec.output_width(); }
    std::size_t num_params() const {
        return phi.num_params() + rho.num_params() + (agg.has_learnable_p() ? 1 : 0);
    }
};

SetModel init_model(const MlpSpec& phi_spec, const AggregatorSpec& agg, const MlpSpec& rho_spec,
                    Rng& rng);

struct ForwardCache {
    MlpCache phi_cache;
    Matrix embeddings;  // (Σ nᵢ) × latent
    Matrix aggregated;  // B × latent
    MlpCache rho_cache;
    Matrix predictions;
    // Fingerprint of the batch the cache came from; backward rejects a
    // mismatch instead of silently producing garbage.
    std::vector<std::size_t> offsets;
    std::size_t element_rows = 0, element_cols = 0;
    bool filled = false;
};

Matrix model_forward(const SetModel& model, const SetBatch& batch, ForwardCache* cache);

struct ModelGrads {
    MlpGrads phi;
    MlpGrads rho;
    double p = 0.0;

    static ModelGrads zeros_like(const SetModel& model);
    bool all_finite() const;
};

/// d_elements, when given, receives the gradient w.r.t. the packed input
/// rows (useful for probing subgradient routing).
ModelGrads model_backward(const SetModel& model, const SetBatch& batch, const ForwardCache& cache,
                          const Matrix& loss_grad, Matrix* d_elements = nullptr);

/// f evaluated on every non-empty subset of the ground elements (rows of
/// `ground`), indexed by bitmask; entry 0 is the empty set, fixed at 0.
/// Requires a scalar-output model and |V| ≤ 12.
std::vector<double> predict_set_function_over_powerset(const SetModel& model,
                                                       const Matrix& ground);

}  // namespace setfunc
