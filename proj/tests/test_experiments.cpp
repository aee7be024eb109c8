#include <gtest/gtest.h>

#include <set>

#include "popdiff/experiments.hpp"

using namespace popdiff;

namespace {

const RhoParams kRho{0.2, 1.4, 0.66, 1.34, 0.8, 1.0, 0.2, 0.05, 0.1};

ConsistencyOptions quick_consistency() {
    ConsistencyOptions o;
    o.nu_levels = {2, 3, 4};
    o.seeds = 5;
    o.horizon = 3.0;
    o.fit.optimizer.max_iter = 5;
    return o;
}

}  // namespace

TEST(TrendHelpers, Median) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_TRUE(std::isnan(median({})));
    EXPECT_TRUE(nonincreasing({3.0, 2.0, 2.0, 1.0}));
    EXPECT_FALSE(nonincreasing({3.0, 2.0, 2.5}));
}

TEST(TrendHelpers, CellSeedsAreDistinctAndStable) {
    std::set<std::uint64_t> seen;
    for (int l = 0; l < 4; ++l)
        for (int s = 0; s < 10; ++s) seen.insert(cell_seed(1, l, s));
    EXPECT_EQ(seen.size(), 40u);
    EXPECT_EQ(cell_seed(7, 2, 3), cell_seed(7, 2, 3));
    EXPECT_NE(cell_seed(7, 2, 3), cell_seed(8, 2, 3));
}

TEST(TrendHelpers, Distances) {
    RhoParams r = kRho;
    r.mu1 += 0.3;
    r.mu2 += 0.4;
    EXPECT_DOUBLE_EQ(trend_distance(r, kRho, TrendNorm::mu), 0.5);
    EXPECT_DOUBLE_EQ(trend_distance(r, kRho, TrendNorm::rho), 0.5);
    EXPECT_EQ(trend_distance(kRho, kRho, TrendNorm::mean), 0.0);
    EXPECT_GT(trend_distance(r, kRho, TrendNorm::mean), 0.0);
}

TEST(TrendHelpers, TruncatedMeanOfSymmetricBoxIsCentre) {
    const RhoParams r{0.5, 1.5, 0.2, 1.0, 1.0, 0.6, 0.3, 0.0, 0.2};
    const QPoint m = truncated_mean(r);
    EXPECT_NEAR(m.q1, 1.0, 1e-12);
    EXPECT_NEAR(m.q2, 0.6, 1e-12);
}

TEST(Consistency, ValidatesOptions) {
    const GridSpec spec{4, 2, 2, 0.25};
    auto o = quick_consistency();
    o.nu_levels = {2, 3};
    EXPECT_THROW(consistency_trend(kRho, spec, o), DomainError);
    o = quick_consistency();
    o.seeds = 4;
    EXPECT_THROW(consistency_trend(kRho, spec, o), DomainError);
    o = quick_consistency();
    o.nu_levels = {2, 4, 4};
    EXPECT_THROW(consistency_trend(kRho, spec, o), DomainError);
    o = quick_consistency();
    o.nu_levels = {1, 2, 3};
    EXPECT_THROW(consistency_trend(kRho, spec, o), DomainError);
}

TEST(Consistency, ReportIsCompleteAndDeterministic) {
    const GridSpec spec{4, 2, 2, 0.25};
    const auto o = quick_consistency();
    const TrendReport a = consistency_trend(kRho, spec, o);
    const TrendReport b = consistency_trend(kRho, spec, o);
    EXPECT_EQ(a.axis, "nu");
    EXPECT_EQ(a.levels, o.nu_levels);
    ASSERT_EQ(a.errors.size(), 3u);
    ASSERT_EQ(a.cells.size(), 15u);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].data_seed, b.cells[i].data_seed);
        EXPECT_EQ(a.cells[i].error, b.cells[i].error);
        EXPECT_EQ(a.cells[i].level, o.nu_levels[i / 5]);
    }
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.errors[i], b.errors[i]);
    const auto j = trend_json(a, kRho, {{"source", "test"}});
    EXPECT_EQ(j.at("cells").size(), 15u);
    EXPECT_EQ(j.at("norm"), "mu");
    EXPECT_NE(j.at("note").get<std::string>().find("numerical evidence"), std::string::npos);
    const std::string csv = trend_csv(a);
    EXPECT_NE(csv.find("nu,median_error,included,total\n2,"), std::string::npos) << csv;
}

TEST(Refinement, ValidatesSpecs) {
    RefinementOptions o;
    o.data_spec = {8, 4, 4, 0.25};
    EXPECT_THROW(refinement_trend(kRho, {{4, 1, 1, 0.25}, {4, 2, 2, 0.25}}, o), DomainError);
    EXPECT_THROW(refinement_trend(kRho, {{4, 2, 2, 0.25}, {4, 3, 3, 0.25}, {4, 6, 6, 0.25}}, o),
                 DomainError);
    EXPECT_THROW(refinement_trend(kRho, {{4, 1, 1, 0.25}, {4, 2, 2, 0.25}, {4, 4, 4, 0.5}}, o),
                 DomainError);
}

TEST(Refinement, FinestLevelIsReference) {
    RefinementOptions o;
    o.data_spec = {8, 4, 4, 0.25};
    o.n_episodes = 3;
    o.pulses.horizon = 3.0;
    o.init = kRho;
    o.fit.optimizer.max_iter = 5;
    const TrendReport rep =
        refinement_trend(kRho, {{4, 1, 1, 0.25}, {4, 2, 2, 0.25}, {4, 4, 4, 0.25}}, o);
    EXPECT_EQ(rep.axis, "N");
    EXPECT_EQ(rep.levels, (std::vector<int>{1, 4, 16}));
    ASSERT_EQ(rep.errors.size(), 3u);
    EXPECT_EQ(rep.errors.back(), 0.0);
    for (const auto& c : rep.cells) EXPECT_FALSE(c.excluded) << c.note;
}

TEST(Refinement, FittedOutputsConverge) {
    RefinementOptions o;
    o.data_spec = {16, 8, 8, 1.0 / 12.0};
    o.n_episodes = 3;
    o.pulses.horizon = 4.0;
    const std::vector<GridSpec> specs = {{2, 1, 1, 1.0 / 12.0}, {4, 2, 2, 1.0 / 12.0}, {8, 4, 4, 1.0 / 12.0}};
    const TrendReport rep = refinement_trend(kRho, specs, o);
    SynthOptions so;
    so.n_episodes = 1;
    so.seed = 99;
    so.pulses.horizon = 4.0;
    const auto u = generate_synthetic(kRho, specs.back(), so).front().u;
    std::vector<Eigen::VectorXd> y;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        ASSERT_FALSE(rep.cells[i].excluded) << rep.cells[i].note;
        y.push_back(population_output(rep.cells[i].rho_hat, specs[i], u));
    }
    const double d01 = (y[0] - y[1]).cwiseAbs().maxCoeff();
    const double d12 = (y[1] - y[2]).cwiseAbs().maxCoeff();
    EXPECT_GT(d01, d12);
}
