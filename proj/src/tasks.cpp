#include "setfunc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "setfunc/errors.hpp"

namespace setfunc {

using nlohmann::json;

void TaskSpec::validate() const {
    if (min_size < 1 || max_size < min_size) throw ConfigError("TaskSpec: bad set-size range");
    if (element_dim < 1) throw ConfigError("TaskSpec: element_dim must be >= 1");
    if (kind == Kind::ToyPointCloud) {
        if (element_dim != 3) throw ConfigError("TaskSpec: point clouds are 3-dimensional");
        if (noise_sigma < 0.0) throw ConfigError("TaskSpec: noise_sigma must be >= 0");
    }
}

std::string task_kind_name(TaskSpec::Kind kind) {
    switch (kind) {
        case TaskSpec::Kind::Median: return "median";
        case TaskSpec::Kind::MaxOfSet: return "max_of_set";
        case TaskSpec::Kind::SumOfSet: return "sum_of_set";
        case TaskSpec::Kind::Range: return "range";
        case TaskSpec::Kind::Cardinality: return "cardinality";
        case TaskSpec::Kind::ToyPointCloud: return "toy_point_cloud";
    }
    return "?";
}

std::string element_dist_name(ElementDist dist) {
    switch (dist) {
        case ElementDist::Uniform01: return "uniform";
        case ElementDist::Gaussian01: return "gaussian";
        case ElementDist::Gamma2: return "gamma";
    }
    return "?";
}

json task_to_json(const TaskSpec& spec) {
    json j;
    j["kind"] = task_kind_name(spec.kind);
    j["dist"] = element_dist_name(spec.dist);
    j["min_size"] = spec.min_size;
    j["max_size"] = spec.max_size;
    j["element_dim"] = spec.element_dim;
    j["noise_sigma"] = spec.noise_sigma;
    return j;
}

TaskSpec task_from_json(const json& j) {
    TaskSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "median") {
        spec.kind = TaskSpec::Kind::Median;
    } else if (kind == "max_of_set") {
        spec.kind = TaskSpec::Kind::MaxOfSet;
    } else if (kind == "sum_of_set") {
        spec.kind = TaskSpec::Kind::SumOfSet;
    } else if (kind == "range") {
        spec.kind = TaskSpec::Kind::Range;
    } else if (kind == "cardinality") {
        spec.kind = TaskSpec::Kind::Cardinality;
    } else if (kind == "toy_point_cloud") {
        spec.kind = TaskSpec::Kind::ToyPointCloud;
    } else {
        throw ConfigError("TaskSpec: unknown kind '" + kind + "'");
    }
    const std::string dist = j.value("dist", "uniform");
    if (dist == "uniform") {
        spec.dist = ElementDist::Uniform01;
    } else if (dist == "gaussian") {
        spec.dist = ElementDist::Gaussian01;
    } else if (dist == "gamma") {
        spec.dist = ElementDist::Gamma2;
    } else {
        throw ConfigError("TaskSpec: unknown dist '" + dist + "'");
    }
    if (j.contains("set_size")) {
        spec.min_size = spec.max_size = j.at("set_size").get<std::size_t>();
    }
    spec.min_size = j.value("min_size", spec.min_size);
    spec.max_size = j.value("max_size", spec.max_size);
    spec.element_dim = j.value("element_dim", std::size_t{1});
    spec.noise_sigma = j.value("noise_sigma", 0.01);
    spec.validate();
    return spec;
}

namespace {

double draw_element(ElementDist dist, Rng& rng) {
    switch (dist) {
        case ElementDist::Uniform01: return rng.next_double();
        // Shifted rather than clipped so the distribution's shape survives;
        // the +5 offset keeps coordinates positive.
        case ElementDist::Gaussian01: return rng.normal() + 5.0;
        case ElementDist::Gamma2: return rng.gamma2();
    }
    return 0.0;
}

int fill_cloud(const TaskSpec& spec, Rng& rng, Matrix& elements, std::size_t row_begin,
               std::size_t n) {
    const int cls = static_cast<int>(rng.below(3));
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.0, y = 0.0, z = 0.0;
        if (cls == 0) {  // sphere surface
            const double a = rng.normal(), b = rng.normal(), c = rng.normal();
            const double norm = std::sqrt(a * a + b * b + c * c) + 1e-12;
            x = a / norm;
            y = b / norm;
            z = c / norm;
        } else if (cls == 1) {  // cube surface
            const std::size_t face = rng.below(6);
            const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
            const double s = face % 2 == 0 ? 1.0 : -1.0;
            if (face / 2 == 0) {
                x = s;
                y = u;
                z = v;
            } else if (face / 2 == 1) {
                x = u;
                y = s;
                z = v;
            } else {
                x = u;
                y = v;
                z = s;
            }
        } else {  // plane patch z = 0
            x = rng.uniform(-1.0, 1.0);
            y = rng.uniform(-1.0, 1.0);
            z = 0.0;
        }
        elements(row_begin + i, 0) = x + spec.noise_sigma * rng.normal();
        elements(row_begin + i, 1) = y + spec.noise_sigma * rng.normal();
        elements(row_begin + i, 2) = z + spec.noise_sigma * rng.normal();
    }
    return cls;
}

}  // namespace

double compute_target(const TaskSpec& spec, const Matrix& elements, std::size_t row_begin,
                      std::size_t row_end) {
    const std::size_t n = row_end - row_begin;
    std::vector<double> first(n);
    for (std::size_t i = 0; i < n; ++i) first[i] = elements(row_begin + i, 0);
    switch (spec.kind) {
        case TaskSpec::Kind::Median: {
            std::sort(first.begin(), first.end());
            return first[(n - 1) / 2];  // lower median for even n
        }
        case TaskSpec::Kind::MaxOfSet: return *std::max_element(first.begin(), first.end());
        case TaskSpec::Kind::SumOfSet: return std::accumulate(first.begin(), first.end(), 0.0);
        case TaskSpec::Kind::Range: {
            const auto [lo, hi] = std::minmax_element(first.begin(), first.end());
            return *hi - *lo;
        }
        case TaskSpec::Kind::Cardinality: return static_cast<double>(n);
        case TaskSpec::Kind::ToyPointCloud:
            throw DomainError("compute_target: point-cloud labels are drawn, not derived");
    }
    return 0.0;
}

Dataset generate(const TaskSpec& spec, std::size_t n_sets, Rng& rng) {
    spec.validate();
    if (n_sets < 1) throw DomainError("generate: n_sets must be >= 1");

    Dataset ds;
    ds.task = spec;
    ds.seed = rng.seed();

    // Pass 1: sizes (first draw of each per-set stream) fix the layout.
    std::vector<std::size_t> sizes(n_sets);
    ds.batch.offsets.assign(1, 0);
    for (std::size_t s = 0; s < n_sets; ++s) {
        Rng stream = rng.split(s);
        sizes[s] = spec.min_size + stream.below(spec.max_size - spec.min_size + 1);
        ds.batch.offsets.push_back(ds.batch.offsets.back() + sizes[s]);
    }
    ds.batch.elements = Matrix(ds.batch.offsets.back(), spec.element_dim);
    if (spec.is_classification()) {
        ds.batch.labels.assign(n_sets, 0);
    } else {
        ds.batch.targets.assign(n_sets, 0.0);
    }

    // Pass 2: per-set streams are independent, so sets fill in parallel
    // with bit-identical results on either lane.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n_sets); ++si) {
        const auto s = static_cast<std::size_t>(si);
        Rng stream = rng.split(s);
        (void)stream.below(spec.max_size - spec.min_size + 1);  // replay the size draw
        const std::size_t lo = ds.batch.offsets[s];
        const std::size_t n = sizes[s];
        if (spec.is_classification()) {
            ds.batch.labels[s] = fill_cloud(spec, stream, ds.batch.elements, lo, n);
        } else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < spec.element_dim; ++c)
                    ds.batch.elements(lo + i, c) = draw_element(spec.dist, stream);
            ds.batch.targets[s] = compute_target(spec, ds.batch.elements, lo, lo + n);
        }
    }
    ds.batch.validate();
    return ds;
}

void save(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save: cannot open '" + path + "' for writing");

    json header = task_to_json(dataset.task);
    header["format_version"] = 1;
    header["seed"] = dataset.seed;
    header["n_sets"] = dataset.batch.num_sets();
    out << header.dump() << '\n';

    for (std::size_t s = 0; s < dataset.batch.num_sets(); ++s) {
        const std::size_t lo = dataset.batch.offsets[s], hi = dataset.batch.offsets[s + 1];
        json row;
        json x = json::array();
        for (std::size_t r = lo; r < hi; ++r) {
            json elem = json::array();
            for (std::size_t c = 0; c < dataset.batch.dim(); ++c)
                elem.push_back(dataset.batch.elements(r, c));
            x.push_back(std::move(elem));
        }
        row["x"] = std::move(x);
        if (dataset.task.is_classification()) {
            row["y"] = dataset.batch.labels[s];
        } else {
            row["y"] = dataset.batch.targets[s];
        }
        out << row.dump() << '\n';
    }
    if (!out) throw Error("save: write failed for '" + path + "'");
}

Dataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load: cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("load: empty file '" + path + "'");
    ++line_no;

    Dataset ds;
    json header;
    try {
        header = json::parse(line);
        ds.task = task_from_json(header);
        ds.seed = header.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ParseError("load: line 1: bad header: " + std::string(e.what()));
    }
    const auto expected = header.value("n_sets", std::size_t{0});

    std::vector<std::vector<std::vector<double>>> sets;
    std::vector<double> targets;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json row = json::parse(line);
            sets.push_back(row.at("x").get<std::vector<std::vector<double>>>());
            if (ds.task.is_classification()) {
                labels.push_back(row.at("y").get<int>());
            } else {
                targets.push_back(row.at("y").get<double>());
            }
        } catch (const json::exception& e) {
            throw ParseError("load: line " + std::to_string(line_no) + ": " +
                             std::string(e.what()));
        }
    }
    if (sets.empty()) throw ParseError("load: no sets in '" + path + "'");
    if (expected != 0 && sets.size() != expected) {
        throw ParseError("load: header promises " + std::to_string(expected) + " sets, file has " +
                         std::to_string(sets.size()));
    }

    std::size_t total = 0;
    for (const auto& s : sets) total += s.size();
    ds.batch.elements = Matrix(total, ds.task.element_dim);
    ds.batch.offsets.assign(1, 0);
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        if (sets[s].empty()) {
            throw ParseError("load: line " + std::to_string(s + 2) + ": empty set");
        }
        for (const auto& elem : sets[s]) {
            if (elem.size() != ds.task.element_dim) {
                throw ParseError("load: line " + std::to_string(s + 2) +
                                 ": element dim mismatch");
            }
            for (std::size_t c = 0; c < elem.size(); ++c) ds.batch.elements(cursor, c) = elem[c];
            ++cursor;
        }
        ds.batch.offsets.push_back(cursor);
    }
    ds.batch.targets = std::move(targets);
    ds.batch.labels = std::move(labels);
    ds.batch.validate();
    return ds;
}

std::array<Dataset, 3> split_dataset(const Dataset& dataset,
                                     const std::array<double, 3>& fractions, Rng& rng) {
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw ValidationError("split: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split: fractions sum to " + std::to_string(sum));
    }
    const std::size_t b = dataset.batch.num_sets();
    std::vector<std::size_t> order(b);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = b; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const auto n0 = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(b)));
    const auto n1 = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(b)));
    if (n0 + n1 > b) throw ValidationError("split: rounding exceeded the dataset size");

    std::array<Dataset, 3> out;
    const std::array<std::pair<std::size_t, std::size_t>, 3> ranges = {
        std::pair{std::size_t{0}, n0}, {n0, n0 + n1}, {n0 + n1, b}};
    for (std::size_t part = 0; part < 3; ++part) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(ranges[part].first),
                                           order.begin() + static_cast<std::ptrdiff_t>(ranges[part].second));
        out[part].batch = dataset.batch.gather(idx);
        out[part].task = dataset.task;
        out[part].seed = dataset.seed;
    }
    return out;
}

std::string element_stats_csv(const Dataset& dataset) {
    std::ostringstream out;
    out << "dim,mean,std,min,max\n";
    const Matrix& e = dataset.batch.elements;
    for (std::size_t c = 0; c < e.cols(); ++c) {
        double mean = 0.0, lo = e(0, c), hi = e(0, c);
        for (std::size_t r = 0; r < e.rows(); ++r) {
            mean += e(r, c);
            lo = std::min(lo, e(r, c));
            hi = std::max(hi, e(r, c));
        }
        mean /= static_cast<double>(e.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < e.rows(); ++r) var += (e(r, c) - mean) * (e(r, c) - mean);
        var /= static_cast<double>(e.rows());
        out << c << ',' << json(mean).dump() << ',' << json(std::sqrt(var)).dump() << ','
            << json(lo).dump() << ',' << json(hi).dump() << '\n';
    }
    return out.str();
}

}  // namespace setfunc
