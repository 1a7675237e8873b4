#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "setfunc/errors.hpp"
#include "setfunc/tasks.hpp"

using namespace setfunc;

namespace {

TaskSpec task_of(TaskSpec::Kind kind, std::size_t lo, std::size_t hi, std::size_t d = 1) {
    TaskSpec t;
    t.kind = kind;
    t.min_size = lo;
    t.max_size = hi;
    t.element_dim = d;
    return t;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST(Generate, MedianOfSmallSet) {
    const TaskSpec spec = task_of(TaskSpec::Kind::Median, 3, 3);
    Matrix elems = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
    EXPECT_DOUBLE_EQ(compute_target(spec, elems, 0, 3), 2.0);
    // Lower median for even sizes.
    Matrix four = Matrix::from_rows({{4.0}, {1.0}, {3.0}, {2.0}});
    EXPECT_DOUBLE_EQ(compute_target(spec, four, 0, 4), 2.0);
}

TEST(Generate, CardinalityTargetIsSetSize) {
    Rng rng(1);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Cardinality, 7, 7), 5, rng);
    for (double t : ds.batch.targets) EXPECT_DOUBLE_EQ(t, 7.0);
}

TEST(Generate, GammaMeanMatchesShapeScale) {
    Rng rng(2);
    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += rng.gamma2();
    mean /= n;
    EXPECT_NEAR(mean, 2.0, 0.05);
}

TEST(Generate, TargetsRecomputableFromElements) {
    Rng rng(3);
    for (auto kind : {TaskSpec::Kind::Median, TaskSpec::Kind::MaxOfSet, TaskSpec::Kind::SumOfSet,
                      TaskSpec::Kind::Range, TaskSpec::Kind::Cardinality}) {
        const TaskSpec spec = task_of(kind, 3, 9);
        Rng gen = rng.split(static_cast<std::uint64_t>(kind));
        const Dataset ds = generate(spec, 50, gen);
        for (std::size_t s = 0; s < ds.batch.num_sets(); ++s) {
            const double recomputed = compute_target(spec, ds.batch.elements,
                                                     ds.batch.offsets[s], ds.batch.offsets[s + 1]);
            EXPECT_EQ(recomputed, ds.batch.targets[s]);
        }
    }
}

TEST(Generate, PowerMeanCompatibleTasksArePositive) {
    Rng rng(4);
    for (auto dist : {ElementDist::Uniform01, ElementDist::Gaussian01, ElementDist::Gamma2}) {
        TaskSpec spec = task_of(TaskSpec::Kind::Median, 4, 16);
        spec.dist = dist;
        Rng gen = rng.split(static_cast<std::uint64_t>(dist));
        const Dataset ds = generate(spec, 200, gen);
        ASSERT_TRUE(spec.positive_elements());
        for (double v : ds.batch.elements.data()) ASSERT_GT(v, 0.0);
    }
}

TEST(Generate, RegenerationIsBitIdentical) {
    const TaskSpec spec = task_of(TaskSpec::Kind::Median, 2, 12);
    Rng r1(42), r2(42);
    const Dataset a = generate(spec, 100, r1);
    const Dataset b = generate(spec, 100, r2);
    EXPECT_EQ(a.batch.elements, b.batch.elements);
    EXPECT_EQ(a.batch.offsets, b.batch.offsets);
    EXPECT_EQ(a.batch.targets, b.batch.targets);
}

TEST(Generate, PointCloudsCarryLabelsAndShape) {
    TaskSpec spec;
    spec.kind = TaskSpec::Kind::ToyPointCloud;
    spec.element_dim = 3;
    spec.min_size = spec.max_size = 32;
    spec.noise_sigma = 0.02;
    Rng rng(5);
    const Dataset ds = generate(spec, 60, rng);
    ASSERT_EQ(ds.batch.labels.size(), 60u);
    std::set<int> seen;
    for (int label : ds.batch.labels) {
        ASSERT_GE(label, 0);
        ASSERT_LT(label, 3);
        seen.insert(label);
    }
    EXPECT_EQ(seen.size(), 3u);

    // Sphere clouds sit near unit radius.
    for (std::size_t s = 0; s < ds.batch.num_sets(); ++s) {
        if (ds.batch.labels[s] != 0) continue;
        for (std::size_t r = ds.batch.offsets[s]; r < ds.batch.offsets[s + 1]; ++r) {
            const double radius = std::sqrt(ds.batch.elements(r, 0) * ds.batch.elements(r, 0) +
                                            ds.batch.elements(r, 1) * ds.batch.elements(r, 1) +
                                            ds.batch.elements(r, 2) * ds.batch.elements(r, 2));
            EXPECT_NEAR(radius, 1.0, 0.15);
        }
        break;
    }
}

TEST(SaveLoad, RoundTripIsBitExact) {
    Rng rng(6);
    TaskSpec spec = task_of(TaskSpec::Kind::Median, 2, 9);
    spec.dist = ElementDist::Gaussian01;
    const Dataset ds = generate(spec, 40, rng);
    const auto path = temp_file("setfunc_roundtrip.ndjson");
    save(ds, path.string());
    const Dataset back = load(path.string());
    EXPECT_EQ(back.batch.elements, ds.batch.elements);
    EXPECT_EQ(back.batch.offsets, ds.batch.offsets);
    EXPECT_EQ(back.batch.targets, ds.batch.targets);
    EXPECT_EQ(back.seed, ds.seed);
    std::filesystem::remove(path);
}

TEST(SaveLoad, TruncatedLineReportsLineNumber) {
    Rng rng(7);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Median, 3, 3), 5, rng);
    const auto path = temp_file("setfunc_truncated.ndjson");
    save(ds, path.string());
    // Chop the file in the middle of the last line.
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 10);
    try {
        load(path.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(SaveLoad, HeaderOnlyFileIsNoSetsError) {
    const auto path = temp_file("setfunc_empty.ndjson");
    {
        std::ofstream out(path);
        out << R"({"format_version":1,"kind":"median","dist":"uniform","min_size":3,)"
            << R"("max_size":3,"element_dim":1,"noise_sigma":0.01,"seed":0,"n_sets":0})" << "\n";
    }
    try {
        load(path.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("no sets"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(Split, ProportionsAreExactOnRoundNumbers) {
    Rng rng(8);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Median, 3, 3), 100, rng);
    Rng split_rng(9);
    const auto parts = split_dataset(ds, {0.8, 0.1, 0.1}, split_rng);
    EXPECT_EQ(parts[0].batch.num_sets(), 80u);
    EXPECT_EQ(parts[1].batch.num_sets(), 10u);
    EXPECT_EQ(parts[2].batch.num_sets(), 10u);
}

TEST(Split, UnionCoversOriginalTargets) {
    Rng rng(10);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Median, 2, 8), 50, rng);
    Rng split_rng(11);
    const auto parts = split_dataset(ds, {0.6, 0.2, 0.2}, split_rng);

    std::multiset<double> original(ds.batch.targets.begin(), ds.batch.targets.end());
    std::multiset<double> covered;
    for (const auto& part : parts)
        covered.insert(part.batch.targets.begin(), part.batch.targets.end());
    EXPECT_EQ(original, covered);
}

TEST(Split, DeterministicGivenSeed) {
    Rng rng(12);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Median, 3, 3), 30, rng);
    Rng s1(13), s2(13);
    const auto a = split_dataset(ds, {0.5, 0.3, 0.2}, s1);
    const auto b = split_dataset(ds, {0.5, 0.3, 0.2}, s2);
    for (std::size_t part = 0; part < 3; ++part)
        EXPECT_EQ(a[part].batch.elements, b[part].batch.elements);
}

TEST(Split, RejectsBadFractions) {
    Rng rng(14);
    const Dataset ds = generate(task_of(TaskSpec::Kind::Median, 3, 3), 10, rng);
    Rng split_rng(15);
    EXPECT_THROW(split_dataset(ds, {0.5, 0.2, 0.2}, split_rng), ValidationError);
    EXPECT_THROW(split_dataset(ds, {1.2, -0.1, -0.1}, split_rng), ValidationError);
}

TEST(Stats, CsvHasOneRowPerDimension) {
    Rng rng(16);
    TaskSpec spec;
    spec.kind = TaskSpec::Kind::ToyPointCloud;
    spec.element_dim = 3;
    spec.min_size = spec.max_size = 8;
    const Dataset ds = generate(spec, 10, rng);
    const std::string csv = element_stats_csv(ds);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    EXPECT_EQ(lines, 4u);
}
