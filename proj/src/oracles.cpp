#include "setfunc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "setfunc/errors.hpp"
#include "setfunc/training.hpp"

namespace setfunc {

using nlohmann::json;

json CheckReport::to_json() const {
    json j;
    j["name"] = name;
    j["passed"] = passed;
    j["worst_violation"] = worst_violation;
    j["tolerance"] = tolerance;
    if (!witness.empty()) j["witness"] = json::parse(witness);
    return j;
}

namespace {

std::vector<std::size_t> identity_perm(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(perm[i], c);
    return out;
}

}  // namespace

CheckReport check_permutation_invariance_fn(const SetVectorFn& f,
                                            const std::vector<Matrix>& sets, std::size_t n_perms,
                                            double tol, Rng& rng) {
    if (!(tol > 0.0)) throw DomainError("check_permutation_invariance: tol must be > 0");
    CheckReport report;
    report.name = "permutation_invariance";
    report.tolerance = tol;

    json witness;
    for (std::size_t si = 0; si < sets.size(); ++si) {
        const Matrix& set = sets[si];
        const std::vector<double> base = f(set);
        const std::size_t n = set.rows();

        const auto probe = [&](const std::vector<std::size_t>& perm) {
            const std::vector<double> out = f(permute_rows(set, perm));
            double v = 0.0;
            for (std::size_t j = 0; j < base.size(); ++j)
                v = std::max(v, std::abs(out[j] - base[j]));
            if (v > report.worst_violation) {
                report.worst_violation = v;
                witness = {{"set_index", si}, {"permutation", perm}, {"violation", v}};
            }
        };

        if (n <= 6) {
            std::vector<std::size_t> perm = identity_perm(n);
            do {
                probe(perm);
            } while (std::next_permutation(perm.begin(), perm.end()));
        } else {
            for (std::size_t s = 0; s < n_perms; ++s) {
                std::vector<std::size_t> perm = identity_perm(n);
                for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
                probe(perm);
            }
        }
    }
    report.passed = report.worst_violation <= tol;
    if (!report.passed) report.witness = witness.dump();
    return report;
}

CheckReport check_permutation_invariance(const SetModel& model, const std::vector<Matrix>& sets,
                                         std::size_t n_perms, double tol, Rng& rng) {
    const SetVectorFn f = [&model](const Matrix& set) {
        SetBatch one;
        one.elements = set;
        one.offsets = {0, set.rows()};
        const Matrix pred = model_forward(model, one, nullptr);
        return std::vector<double>(pred.data().begin(), pred.data().end());
    };
    return check_permutation_invariance_fn(f, sets, n_perms, tol, rng);
}

MaskSetFunction powerset_function(const SetModel& model, const Matrix& ground) {
    auto values = std::make_shared<std::vector<double>>(
        predict_set_function_over_powerset(model, ground));
    return [values](std::uint32_t mask) { return (*values)[mask]; };
}

namespace {

struct PairScan {
    double worst = 0.0;        // signed per check semantics
    std::uint32_t s = 0, t = 0;
};

// Enumerates all non-empty pairs, tracking the extreme of `score`.
// Chunked over the outer mask with a fixed layout, so the parallel scan is
// deterministic and prefers the earliest pair on ties.
template <class Score>
PairScan scan_pairs(std::size_t ground_size, Score&& score, bool track_max) {
    const std::uint32_t total = 1u << ground_size;
    const std::size_t nouter = total - 1;
    std::vector<PairScan> partials(nouter);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t oi = 0; oi < static_cast<std::ptrdiff_t>(nouter); ++oi) {
        const std::uint32_t s = static_cast<std::uint32_t>(oi) + 1;
        PairScan local;
        local.worst = track_max ? -1e308 : 1e308;
        for (std::uint32_t t = 1; t < total; ++t) {
            const double v = score(s, t);
            const bool better = track_max ? v > local.worst : v < local.worst;
            if (better) {
                local.worst = v;
                local.s = s;
                local.t = t;
            }
        }
        partials[oi] = local;
    }

    PairScan best = partials[0];
    for (std::size_t i = 1; i < nouter; ++i) {
        const bool better = track_max ? partials[i].worst > best.worst
                                      : partials[i].worst < best.worst;
        if (better) best = partials[i];
    }
    return best;
}

void require_ground_size(std::size_t ground_size, const char* op) {
    if (ground_size < 1 || ground_size > 10) {
        throw ResourceError(std::string(op) + ": ground size " + std::to_string(ground_size) +
                            " outside [1, 10]");
    }
}

}  // namespace

CheckReport check_modularity(const MaskSetFunction& f, std::size_t ground_size, double tol) {
    require_ground_size(ground_size, "check_modularity");
    CheckReport report;
    report.name = "modularity";
    report.tolerance = tol;

    const auto score = [&](std::uint32_t s, std::uint32_t t) {
        return std::abs(f(s) + f(t) - f(s | t) - f(s & t));
    };
    const PairScan scan = scan_pairs(ground_size, score, /*track_max=*/true);
    report.worst_violation = scan.worst;
    report.passed = report.worst_violation <= tol;
    if (!report.passed) {
        report.witness =
            json{{"S", scan.s}, {"T", scan.t}, {"violation", scan.worst}}.dump();
    }
    return report;
}

CheckReport check_submodularity(const MaskSetFunction& f, std::size_t ground_size, double tol) {
    require_ground_size(ground_size, "check_submodularity");
    CheckReport report;
    report.name = "submodularity";
    report.tolerance = tol;

    const auto score = [&](std::uint32_t s, std::uint32_t t) {
        return f(s) + f(t) - f(s | t) - f(s & t);
    };
    const PairScan scan = scan_pairs(ground_size, score, /*track_max=*/false);
    report.worst_violation = -scan.worst;  // negative slack is the violation
    report.passed = report.worst_violation <= tol;
    if (!report.passed) {
        report.witness = json{{"S", scan.s}, {"T", scan.t}, {"slack", scan.worst}}.dump();
    }
    return report;
}

CheckReport grad_check(const SetModel& model, const SetBatch& batch, double h, double tol) {
    if (h < 1e-7 || h > 1e-3) throw DomainError("grad_check: h outside [1e-7, 1e-3]");
    CheckReport report;
    report.name = "grad_check(" + agg_kind_name(model.agg.kind) + ")";
    report.tolerance = tol;

    SetModel work = model;
    ForwardCache cache;
    const Matrix pred = model_forward(work, batch, &cache);

    // Fixed random linear functional of the outputs as the probe loss.
    Rng coef_rng(0xC0FFEE);
    Matrix coef(pred.rows(), pred.cols());
    for (double& v : coef.data()) v = coef_rng.uniform(-1.0, 1.0);

    // Exact ties between distinct elements sit on a subgradient kink; those
    // coordinates are excluded and counted.
    std::size_t skipped = 0;
    const bool extremal =
        model.agg.kind == AggKind::Max || model.agg.kind == AggKind::Min;
    if (extremal) {
        for (std::size_t s = 0; s < batch.num_sets(); ++s) {
            const std::size_t lo = batch.offsets[s], hi = batch.offsets[s + 1];
            for (std::size_t c = 0; c < cache.embeddings.cols(); ++c) {
                std::size_t best = lo;
                for (std::size_t r = lo + 1; r < hi; ++r) {
                    const bool b = model.agg.kind == AggKind::Max
                                       ? cache.embeddings(r, c) > cache.embeddings(best, c)
                                       : cache.embeddings(r, c) < cache.embeddings(best, c);
                    if (b) best = r;
                }
                for (std::size_t r = lo; r < hi; ++r) {
                    if (r == best) continue;
                    if (cache.embeddings(r, c) != cache.embeddings(best, c)) continue;
                    bool same_element = true;
                    for (std::size_t d = 0; d < batch.dim(); ++d)
                        same_element &= batch.elements(r, d) == batch.elements(best, d);
                    if (!same_element) ++skipped;
                }
            }
        }
    }

    const ModelGrads grads = model_backward(work, batch, cache, coef);
    const std::vector<double> analytic = flatten_grads(grads, work);
    ParamRefs refs = collect_params(work);

    double loss_scale = 0.0, grad_scale = 0.0;
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) acc += pred.data()[i] * coef.data()[i];
        loss_scale = std::abs(acc);
        for (double g : analytic) grad_scale = std::max(grad_scale, std::abs(g));
    }
    const double floor = 5e-3 * (1.0 + std::max(loss_scale, grad_scale));

    const auto loss_at = [&]() {
        const Matrix out = model_forward(work, batch, nullptr);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data()[i] * coef.data()[i];
        return acc;
    };

    const bool check_phi = !(extremal && skipped > 0);
    const std::size_t phi_count = work.phi.num_params();
    for (std::size_t k = 0; k < refs.size(); ++k) {
        if (!check_phi && k < phi_count) continue;
        const bool is_p = work.agg.has_learnable_p() && k + 1 == refs.size();
        const double saved = *refs.ptrs[k];
        // Inside the geometric branch, grad_p is defined as the p→0 limit;
        // difference across the plateau centered at zero.
        const bool geom_p = is_p && std::abs(saved) < kPowerMeanGeomEps;
        const double center = geom_p ? 0.0 : saved;
        const double step = geom_p ? 1e-3 : h;
        *refs.ptrs[k] = center + step;
        const double lp = loss_at();
        *refs.ptrs[k] = center - step;
        const double lm = loss_at();
        *refs.ptrs[k] = saved;
        const double fd = (lp - lm) / (2.0 * step);
        const double err =
            std::abs(analytic[k] - fd) / std::max({std::abs(analytic[k]), std::abs(fd), floor});
        if (err > report.worst_violation) {
            report.worst_violation = err;
            if (err > tol) {
                report.witness = json{{"param_index", k},
                                      {"analytic", analytic[k]},
                                      {"finite_difference", fd}}
                                     .dump();
            }
        }
    }
    report.passed = report.worst_violation <= tol;
    if (skipped > 0) {
        json w = report.witness.empty() ? json::object() : json::parse(report.witness);
        w["skipped_coordinates"] = skipped;
        report.witness = w.dump();
    }
    return report;
}

CheckReport check_sum_isomorphism(const MonotoneMapId& g,
                                  const std::vector<std::vector<double>>& samples, double tol,
                                  Rng& rng) {
    CheckReport report;
    report.name = "sum_isomorphism(" + g.name() + ")";
    report.tolerance = tol;

    json witness;
    for (std::size_t si = 0; si < samples.size(); ++si) {
        const std::vector<double>& x = samples[si];
        const double composed = sum_isomorphism_aggregate(x, g);
        // Naive direct route, no max-shift.
        double acc = 0.0;
        for (double v : x) acc += g.inverse(v);
        const double direct = g.apply(acc);
        const double v = std::abs(composed - direct);
        if (v > report.worst_violation) {
            report.worst_violation = v;
            witness = {{"sample_index", si}, {"composed", composed}, {"direct", direct}};
        }
    }

    // Inverse contract g(g⁻¹(y)) = y over the map's range.
    for (int i = 0; i < 1000; ++i) {
        const double y = g.kind == MonotoneMapId::Kind::Exp ||
                                 g.kind == MonotoneMapId::Kind::Power
                             ? rng.uniform(0.05, 20.0)
                             : rng.uniform(-20.0, 20.0);
        const double rt = g.apply(g.inverse(y));
        const double v = std::abs(rt - y) / std::max(1.0, std::abs(y));
        if (v > report.worst_violation) {
            report.worst_violation = v;
            witness = {{"round_trip_y", y}, {"value", rt}};
        }
    }
    report.passed = report.worst_violation <= tol;
    if (!report.passed) report.witness = witness.dump();
    return report;
}

}  // namespace setfunc
