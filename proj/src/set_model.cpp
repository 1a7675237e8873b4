#include "setfunc/set_model.hpp"

#include <cmath>
#include <string>

#include "setfunc/errors.hpp"
#include "setfunc/kernels.hpp"

namespace setfunc {

void SetBatch::validate() const {
    if (offsets.size() < 2) throw ValidationError("SetBatch: needs at least one set");
    if (offsets.front() != 0) throw ValidationError("SetBatch: offsets must start at 0");
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        if (offsets[i + 1] <= offsets[i]) {
            throw ValidationError("SetBatch: empty or out-of-order set at index " +
                                  std::to_string(i));
        }
    }
    if (offsets.back() != elements.rows()) {
        throw ValidationError("SetBatch: offsets end at " + std::to_string(offsets.back()) +
                              " but elements have " + std::to_string(elements.rows()) + " rows");
    }
    const std::size_t b = num_sets();
    if (!targets.empty() && targets.size() != b)
        throw ValidationError("SetBatch: target count mismatch");
    if (!labels.empty() && labels.size() != b)
        throw ValidationError("SetBatch: label count mismatch");
}

SetBatch SetBatch::gather(const std::vector<std::size_t>& set_indices) const {
    SetBatch out;
    std::size_t total = 0;
    for (std::size_t s : set_indices) total += set_size(s);
    out.elements = Matrix(total, dim());
    out.offsets.reserve(set_indices.size() + 1);
    out.offsets.push_back(0);
    std::size_t cursor = 0;
    for (std::size_t s : set_indices) {
        const std::size_t lo = offsets[s], hi = offsets[s + 1];
        for (std::size_t r = lo; r < hi; ++r) {
            for (std::size_t c = 0; c < dim(); ++c) out.elements(cursor, c) = elements(r, c);
            ++cursor;
        }
        out.offsets.push_back(cursor);
        if (!targets.empty()) out.targets.push_back(targets[s]);
        if (!labels.empty()) out.labels.push_back(labels[s]);
    }
    return out;
}

SetModel init_model(const MlpSpec& phi_spec, const AggregatorSpec& agg, const MlpSpec& rho_spec,
                    Rng& rng) {
    phi_spec.validate();
    rho_spec.validate();
    agg.validate();
    if (phi_spec.output_width() != rho_spec.input_width()) {
        throw ConfigError("init_model: phi output width " +
                          std::to_string(phi_spec.output_width()) + " != rho input width " +
                          std::to_string(rho_spec.input_width()));
    }
    if (agg.requires_positive_inputs() && !phi_spec.positive_output) {
        throw ConfigError("init_model: aggregator '" + agg_kind_name(agg.kind) +
                          "' needs positive inputs; set phi positive_output");
    }
    SetModel model;
    model.phi = Mlp::init(phi_spec, rng);
    model.agg = agg;
    if (model.agg.has_learnable_p()) model.agg.p = 1.0;
    model.rho = Mlp::init(rho_spec, rng);
    return model;
}

ModelGrads ModelGrads::zeros_like(const SetModel& model) {
    ModelGrads g;
    g.phi = MlpGrads::zeros_like(model.phi);
    g.rho = MlpGrads::zeros_like(model.rho);
    g.p = 0.0;
    return g;
}

bool ModelGrads::all_finite() const {
    if (!std::isfinite(p)) return false;
    for (const auto& w : phi.weights)
        if (!w.all_finite()) return false;
    for (const auto& w : rho.weights)
        if (!w.all_finite()) return false;
    for (const auto& b : phi.biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    for (const auto& b : rho.biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

Matrix model_forward(const SetModel& model, const SetBatch& batch, ForwardCache* cache) {
    batch.validate();
    if (batch.dim() != model.input_dim()) {
        throw ShapeError("model_forward: batch dim " + std::to_string(batch.dim()) +
                         " != phi input width " + std::to_string(model.input_dim()));
    }
    const std::size_t b = batch.num_sets();
    const std::size_t m = model.latent_dim();

    MlpCache local_phi;
    MlpCache* phi_cache = cache ? &cache->phi_cache : &local_phi;
    const Matrix embeddings = mlp_forward(model.phi, batch.elements, phi_cache);

    Matrix aggregated(b, m);
    // Sets are independent; each thread owns whole output rows, so the
    // parallel lane is bitwise identical to the serial one.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(b); ++si) {
        const auto s = static_cast<std::size_t>(si);
        const Matrix block = embeddings.slice_rows(batch.offsets[s], batch.offsets[s + 1]);
        const std::vector<double> agg = aggregate(block, {}, model.agg);
        for (std::size_t j = 0; j < m; ++j) aggregated(s, j) = agg[j];
    }

    MlpCache local_rho;
    MlpCache* rho_cache = cache ? &cache->rho_cache : &local_rho;
    Matrix predictions = mlp_forward(model.rho, aggregated, rho_cache);

    if (cache) {
        cache->embeddings = embeddings;
        cache->aggregated = aggregated;
        cache->predictions = predictions;
        cache->offsets = batch.offsets;
        cache->element_rows = batch.elements.rows();
        cache->element_cols = batch.elements.cols();
        cache->filled = true;
    }
    return predictions;
}

ModelGrads model_backward(const SetModel& model, const SetBatch& batch, const ForwardCache& cache,
                          const Matrix& loss_grad, Matrix* d_elements) {
    if (!cache.filled || cache.offsets != batch.offsets ||
        cache.element_rows != batch.elements.rows() ||
        cache.element_cols != batch.elements.cols()) {
        throw ContractError("model_backward: cache does not match this batch");
    }
    if (loss_grad.rows() != batch.num_sets() || loss_grad.cols() != model.output_dim()) {
        throw ShapeError("model_backward: loss_grad is " + shape_str(loss_grad) + ", expected " +
                         std::to_string(batch.num_sets()) + "x" +
                         std::to_string(model.output_dim()));
    }

    ModelGrads grads = ModelGrads::zeros_like(model);
    const Matrix d_aggregated = mlp_backward(model.rho, cache.rho_cache, loss_grad, grads.rho);

    const std::size_t b = batch.num_sets();
    Matrix d_embeddings(cache.embeddings.rows(), cache.embeddings.cols(), 0.0);
    std::vector<double> per_set_grad_p(b, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(b); ++si) {
        const auto s = static_cast<std::size_t>(si);
        const std::size_t lo = batch.offsets[s], hi = batch.offsets[s + 1];
        const Matrix block = cache.embeddings.slice_rows(lo, hi);
        const AggregateBackward back =
            aggregate_backward(block, {}, model.agg, d_aggregated.row_span(s));
        for (std::size_t r = lo; r < hi; ++r) {
            for (std::size_t c = 0; c < d_embeddings.cols(); ++c) {
                d_embeddings(r, c) = back.grad_emb(r - lo, c);
            }
        }
        if (back.has_grad_p) per_set_grad_p[s] = back.grad_p;
    }
    if (model.agg.kind == AggKind::PowerMean) grads.p = tree_sum(per_set_grad_p);

    Matrix d_input = mlp_backward(model.phi, cache.phi_cache, d_embeddings, grads.phi);
    if (d_elements) *d_elements = std::move(d_input);
    return grads;
}

std::vector<double> predict_set_function_over_powerset(const SetModel& model,
                                                       const Matrix& ground) {
    const std::size_t v = ground.rows();
    if (v > 12) {
        throw ResourceError("predict_set_function_over_powerset: |V| = " + std::to_string(v) +
                            " exceeds the 2^12 enumeration cap");
    }
    if (model.output_dim() != 1) {
        throw ConfigError("predict_set_function_over_powerset: needs a scalar-output model");
    }
    const std::size_t total = std::size_t{1} << v;
    std::vector<double> values(total, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t mi = 1; mi < static_cast<std::ptrdiff_t>(total); ++mi) {
        const auto mask = static_cast<std::size_t>(mi);
        SetBatch one;
        std::size_t count = 0;
        for (std::size_t e = 0; e < v; ++e) count += (mask >> e) & 1u;
        one.elements = Matrix(count, ground.cols());
        std::size_t r = 0;
        for (std::size_t e = 0; e < v; ++e) {
            if ((mask >> e) & 1u) {
                for (std::size_t c = 0; c < ground.cols(); ++c)
                    one.elements(r, c) = ground(e, c);
                ++r;
            }
        }
        one.offsets = {0, count};
        values[mask] = model_forward(model, one, nullptr)(0, 0);
    }
    return values;
}

}  // namespace setfunc
