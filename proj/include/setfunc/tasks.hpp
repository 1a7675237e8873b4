#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "setfunc/rng.hpp"
#include "setfunc/set_model.hpp"

namespace setfunc {

enum class ElementDist { Uniform01, Gaussian01, Gamma2 };

/// Synthetic stand-ins for set-regression and point-cloud classification
/// benchmarks. Regression targets are exact functions of the elements'
/// first coordinate. The Gaussian median variant shifts elements by +5 so
/// power-mean models can consume them raw.
struct TaskSpec {
    enum class Kind { Median, MaxOfSet, SumOfSet, Range, Cardinality, ToyPointCloud };

    Kind kind = Kind::Median;
    ElementDist dist = ElementDist::Uniform01;  // Median only
    std::size_t min_size = 16;
    std::size_t max_size = 16;
    std::size_t element_dim = 1;
    double noise_sigma = 0.01;  // ToyPointCloud only

    bool is_classification() const { return kind == Kind::ToyPointCloud; }
    std::size_t num_classes() const { return 3; }  // sphere, cube, plane
    /// True when generated element coordinates are strictly positive
    /// (power-mean-compatible raw inputs).
    bool positive_elements() const { return kind != Kind::ToyPointCloud; }
    void validate() const;
};

std::string task_kind_name(TaskSpec::Kind kind);
std::string element_dist_name(ElementDist dist);

nlohmann::json task_to_json(const TaskSpec& spec);
TaskSpec task_from_json(const nlohmann::json& j);

struct Dataset {
    SetBatch batch;
    TaskSpec task;
    std::uint64_t seed = 0;
};

/// i.i.d. sets with exact targets; set i is generated from the split
/// stream rng.split(i), so regeneration is bit-identical and per-set work
/// parallelizes.
Dataset generate(const TaskSpec& spec, std::size_t n_sets, Rng& rng);

/// Recomputes a regression target from stored elements (the oracle used by
/// the recomputation invariant). Lower median for even set sizes.
double compute_target(const TaskSpec& spec, const Matrix& elements, std::size_t row_begin,
                      std::size_t row_end);

/// NDJSON: one metadata header line, then {"x": [[...]], "y": ...} per set;
/// doubles round-trip bit-exactly.
void save(const Dataset& dataset, const std::string& path);
Dataset load(const std::string& path);

/// Disjoint cover in the given proportions, shuffled deterministically.
std::array<Dataset, 3> split_dataset(const Dataset& dataset,
                                     const std::array<double, 3>& fractions, Rng& rng);

/// Per-dimension element statistics (dim, mean, std, min, max).
std::string element_stats_csv(const Dataset& dataset);

}  // namespace setfunc
