#include <gtest/gtest.h>

#include <cmath>

#include "setfunc/errors.hpp"
#include "setfunc/psearch.hpp"

using namespace setfunc;

namespace {

SearchConfig grid_cfg(double lo, double hi, double step,
                      SearchDirection dir = SearchDirection::Maximize) {
    SearchConfig cfg;
    cfg.strategy = SearchConfig::Strategy::Grid;
    cfg.p_min = lo;
    cfg.p_max = hi;
    cfg.step = step;
    cfg.direction = dir;
    return cfg;
}

SearchConfig bayes_cfg(double lo, double hi, std::size_t trials, std::size_t init_points,
                       SearchDirection dir = SearchDirection::Maximize) {
    SearchConfig cfg;
    cfg.strategy = SearchConfig::Strategy::Bayes;
    cfg.p_min = lo;
    cfg.p_max = hi;
    cfg.trials = trials;
    cfg.init_points = init_points;
    cfg.direction = dir;
    return cfg;
}

MlpSpec spec_of(std::vector<std::size_t> widths, Act act = Act::Tanh, bool positive = false) {
    MlpSpec s;
    s.widths = std::move(widths);
    s.activation = act;
    s.positive_output = positive;
    return s;
}

}  // namespace

TEST(GridSearch, OptimumOnGridPointIsExact) {
    const PObjective probe = [](double p) { return -(p - 2.0) * (p - 2.0); };
    const SearchResult r = grid_search(probe, grid_cfg(-10.0, 10.0, 0.5));
    EXPECT_DOUBLE_EQ(r.best_p, 2.0);
    EXPECT_DOUBLE_EQ(r.best_objective, 0.0);
    EXPECT_EQ(r.history.size(), 41u);
}

TEST(GridSearch, ConstantObjectiveTiesToSmallestP) {
    const PObjective probe = [](double) { return 7.0; };
    const SearchResult r = grid_search(probe, grid_cfg(-3.0, 3.0, 1.0));
    EXPECT_DOUBLE_EQ(r.best_p, -3.0);
}

TEST(GridSearch, EmptyGridRejected) {
    const PObjective probe = [](double p) { return p; };
    SearchConfig cfg = grid_cfg(5.0, -5.0, 0.5);
    EXPECT_THROW(grid_search(probe, cfg), ConfigError);
}

TEST(GridSearch, BestIsExactOptimumOfEvaluatedPoints) {
    const PObjective probe = [](double p) { return std::sin(1.3 * p) + 0.2 * p; };
    const SearchResult r = grid_search(probe, grid_cfg(-5.0, 5.0, 0.5));
    double best = -1e300;
    for (const auto& rec : r.history) best = std::max(best, rec.objective);
    EXPECT_DOUBLE_EQ(r.best_objective, best);
}

TEST(GridSearch, MinimizeDirection) {
    const PObjective probe = [](double p) { return (p - 1.5) * (p - 1.5); };
    const SearchResult r = grid_search(probe, grid_cfg(-5.0, 5.0, 0.5, SearchDirection::Minimize));
    EXPECT_DOUBLE_EQ(r.best_p, 1.5);
}

TEST(BayesSearch, FindsSmoothUnimodalOptimum) {
    const PObjective probe = [](double p) { return -(p - 3.3) * (p - 3.3); };
    const SearchResult r = bayes_search(probe, bayes_cfg(-10.0, 10.0, 30, 5));
    EXPECT_EQ(r.history.size(), 30u);
    EXPECT_LE(std::abs(r.best_p - 3.3), 0.25);
}

TEST(BayesSearch, AllEqualObservationsPickSmallestCandidate) {
    const PObjective probe = [](double) { return 1.0; };
    const SearchResult r = bayes_search(probe, bayes_cfg(-4.0, 4.0, 8, 3));
    EXPECT_EQ(r.history.size(), 8u);
    // Acquisition ties resolve to the smallest candidate, the range minimum.
    for (std::size_t i = 3; i < 8; ++i) EXPECT_DOUBLE_EQ(r.history[i].p, -4.0);
    EXPECT_DOUBLE_EQ(r.best_p, -4.0);
}

TEST(BayesSearch, HistoryLengthIsExactlyTrials) {
    const PObjective probe = [](double p) { return std::cos(p); };
    for (std::size_t trials : {5u, 12u, 30u}) {
        const SearchResult r = bayes_search(probe, bayes_cfg(-10.0, 10.0, trials, 5));
        EXPECT_EQ(r.history.size(), trials);
    }
}

TEST(BayesSearch, NeverUnderperformsItsInitialization) {
    const PObjective probe = [](double p) { return std::sin(2.0 * p) - 0.1 * p * p; };
    const SearchConfig cfg = bayes_cfg(-10.0, 10.0, 25, 6);
    const SearchResult r = bayes_search(probe, cfg);
    double init_best = -1e300;
    for (std::size_t i = 0; i < cfg.init_points; ++i)
        init_best = std::max(init_best, r.history[i].objective);
    EXPECT_GE(r.best_objective, init_best);
}

TEST(BayesSearch, RespectsRange) {
    const PObjective probe = [](double p) { return -p * p; };
    const SearchResult r = bayes_search(probe, bayes_cfg(-2.0, 7.0, 20, 4));
    for (const auto& rec : r.history) {
        EXPECT_GE(rec.p, -2.0);
        EXPECT_LE(rec.p, 7.0);
    }
}

TEST(BayesSearch, BudgetValidation) {
    const PObjective probe = [](double p) { return p; };
    SearchConfig cfg = bayes_cfg(-1.0, 1.0, 3, 5);
    EXPECT_THROW(bayes_search(probe, cfg), ConfigError);
    cfg = bayes_cfg(-1.0, 1.0, 10, 1);
    EXPECT_THROW(bayes_search(probe, cfg), ConfigError);
}

TEST(GradientSearch, ConstantEmbeddingsFreezeP) {
    // Every element identical ⇒ per-set power means are constant in p, so
    // grad_p vanishes and p stays at its 1.0 initialization.
    SetBatch batch;
    batch.elements = Matrix(12, 1, 3.0);
    batch.offsets = {0, 3, 6, 9, 12};
    batch.targets = {1.0, 2.0, 3.0, 4.0};

    GradientSearchInputs inputs;
    inputs.phi = spec_of({1, 4}, Act::Tanh, true);
    inputs.agg = AggregatorSpec::power_mean(1.0, true);
    inputs.rho = spec_of({4, 1});
    inputs.train_cfg.epochs = 15;
    inputs.train_cfg.batch_size = 4;
    inputs.train_cfg.optimizer.lr = 0.01;
    inputs.train_set = &batch;
    inputs.val_set = &batch;
    inputs.init_seed = 5;

    SearchConfig cfg;
    cfg.strategy = SearchConfig::Strategy::GradientJoint;
    cfg.p_min = -10.0;
    cfg.p_max = 10.0;
    const SearchResult r = gradient_search(inputs, cfg);
    EXPECT_DOUBLE_EQ(r.best_p, 1.0);
    for (const auto& rec : r.history) EXPECT_DOUBLE_EQ(rec.p, 1.0);
}

TEST(GradientSearch, TrajectoryStaysWithinClamp) {
    Rng data_rng(7);
    TaskSpec t;
    t.kind = TaskSpec::Kind::MaxOfSet;
    t.min_size = t.max_size = 6;
    const Dataset ds = generate(t, 64, data_rng);

    GradientSearchInputs inputs;
    inputs.phi = spec_of({1, 6, 4}, Act::Tanh, true);
    inputs.agg = AggregatorSpec::power_mean(1.0, true);
    inputs.rho = spec_of({4, 1});
    inputs.train_cfg.epochs = 25;
    inputs.train_cfg.batch_size = 16;
    inputs.train_cfg.optimizer.lr = 0.05;  // aggressive on purpose
    inputs.train_set = &ds.batch;
    inputs.val_set = &ds.batch;
    inputs.init_seed = 8;

    SearchConfig cfg;
    cfg.strategy = SearchConfig::Strategy::GradientJoint;
    cfg.p_min = 0.9;
    cfg.p_max = 1.4;
    const SearchResult r = gradient_search(inputs, cfg);
    ASSERT_EQ(r.history.size(), 25u);
    for (const auto& rec : r.history) {
        EXPECT_GE(rec.p, 0.9);
        EXPECT_LE(rec.p, 1.4);
    }
}

TEST(GradientSearch, RequiresLearnableAggregator) {
    GradientSearchInputs inputs;
    inputs.phi = spec_of({1, 4}, Act::Tanh, true);
    inputs.agg = AggregatorSpec::power_mean(1.0, false);
    inputs.rho = spec_of({4, 1});
    SearchConfig cfg;
    cfg.strategy = SearchConfig::Strategy::GradientJoint;
    EXPECT_THROW(gradient_search(inputs, cfg), ConfigError);
}

TEST(SearchResult, CsvAndJsonShapes) {
    const PObjective probe = [](double p) { return -p * p; };
    const SearchResult r = grid_search(probe, grid_cfg(-1.0, 1.0, 0.5));
    const std::string csv = search_result_to_csv(r);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    EXPECT_EQ(lines, 1u + r.history.size());
    EXPECT_EQ(csv.rfind("trial,p,objective,seconds", 0), 0u);

    const auto j = search_result_to_json(r);
    EXPECT_EQ(j.at("history").size(), r.history.size());
    EXPECT_TRUE(j.contains("best_p"));
}
