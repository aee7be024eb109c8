#include <gtest/gtest.h>

#include "oracles.hpp"
#include "popdiff/uncertainty.hpp"

using namespace popdiff;

namespace {

const RhoParams kRho{0.2, 1.4, 0.66, 1.34, 0.8, 1.0, 0.2, 0.05, 0.1};
const GridSpec kSpec{8, 2, 2, 1.0 / 12.0};

RhoParams centred(double sd) {
    return {0.8 - 2.5 * sd, 0.8 + 2.5 * sd, 1.0 - 2.5 * sd, 1.0 + 2.5 * sd, 0.8, 1.0, sd, 0.0, sd};
}

}  // namespace

TEST(BandRank, Examples) {
    EXPECT_EQ(band_lower_rank(1000, 0.75), 125);
    EXPECT_EQ(band_lower_rank(100, 0.9), 5);
    EXPECT_EQ(band_lower_rank(101, 0.5), 25);
}

TEST(CredibleBand, PointMassCollapses) {
    const QPoint q{0.8, 1.1};
    const double half = 5e-4;
    const RhoParams r{q.q1 - half, q.q1 + half, q.q2 - half, q.q2 + half, q.q1, q.q2,
                      1e-4, 0.0, 1e-4};
    const auto u = oracle::pulse(100, kSpec.tau);
    const auto band = credible_band(r, kSpec, u, 0.75, 200, 2);
    EXPECT_LT(band.max_width(), 1e-3);
    const Eigen::VectorXd det = simulate_deterministic(q, kSpec.n, kSpec.tau, u);
    EXPECT_LT((band.lower - det).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LT((band.upper - det).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(CredibleBand, NestedLevels) {
    const auto u = oracle::pulse(80, kSpec.tau);
    const auto narrow = credible_band(kRho, kSpec, u, 0.5, 400, 3);
    const auto wide = credible_band(kRho, kSpec, u, 0.9, 400, 3);
    for (Eigen::Index j = 0; j < narrow.lower.size(); ++j) {
        EXPECT_GE(narrow.lower[j], wide.lower[j]);
        EXPECT_LE(narrow.upper[j], wide.upper[j]);
    }
}

TEST(CredibleBand, SeedDeterminism) {
    const auto u = oracle::pulse(60, kSpec.tau);
    const auto a = credible_band(kRho, kSpec, u, 0.75, 150, 9);
    const auto b = credible_band(kRho, kSpec, u, 0.75, 150, 9);
    const auto c = credible_band(kRho, kSpec, u, 0.75, 150, 10);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
    EXPECT_EQ(a.mean_output, b.mean_output);
    EXPECT_NE(a.upper, c.upper);
}

TEST(CredibleBand, CoversFreshTrajectories) {
    const auto u = oracle::pulse(80, kSpec.tau, 0.5, 2.0);
    const auto band = credible_band(kRho, kSpec, u, 0.75, 1000, 4);
    const auto draws = sample(kRho, 400, 5);
    double inside = 0.0, total = 0.0;
    for (const auto& q : draws) {
        const Eigen::VectorXd y = simulate_deterministic(q, kSpec.n, kSpec.tau, u);
        for (Eigen::Index j = 1; j < y.size(); ++j) {
            inside += (y[j] >= band.lower[j] && y[j] <= band.upper[j]) ? 1.0 : 0.0;
            total += 1.0;
        }
    }
    // Per-time coverage is Binomial(400, ~0.75); the time average is at least as tight.
    EXPECT_NEAR(inside / total, 0.75, 3 * std::sqrt(0.75 * 0.25 / 400.0));
}

TEST(CredibleBand, WidthShrinksWithSigma) {
    const auto u = oracle::pulse(80, kSpec.tau);
    double prev = std::numeric_limits<double>::infinity();
    for (double sd : {0.2, 0.1, 0.05}) {
        const double w = credible_band(centred(sd), kSpec, u, 0.75, 300, 6).max_width();
        EXPECT_LT(w, prev) << sd;
        prev = w;
    }
}

TEST(CredibleBand, MeanInsideBand) {
    const auto u = oracle::pulse(100, kSpec.tau, 0.5, 2.5);
    const auto band = credible_band(kRho, kSpec, u, 0.75, 1000, 7);
    EXPECT_GE(mean_coverage(band), 0.95);
}

TEST(CredibleBand, RejectsBadArguments) {
    const auto u = oracle::pulse(10, kSpec.tau);
    EXPECT_THROW(credible_band(kRho, kSpec, u, 0.75, 99), DomainError);
    EXPECT_THROW(credible_band(kRho, kSpec, u, 1.0, 200), DomainError);
    EXPECT_THROW(credible_band(kRho, kSpec, u, 0.0, 200), DomainError);
}
