#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "popdiff/sampled_system.hpp"

using namespace popdiff;

namespace {

/// Scalar system with generator a (M = 1, K = -a) and input direction 1.
AssembledOperators scalar_ops(double a) {
    AssembledOperators ops;
    ops.n = 0;
    ops.M = BlockDiagonal::zero(1, 1);
    ops.K = BlockDiagonal::zero(1, 1);
    ops.M.blocks[0](0, 0) = 1.0;
    ops.K.blocks[0](0, 0) = -a;
    ops.B = Eigen::VectorXd::Ones(1);
    ops.C = Eigen::VectorXd::Ones(1);
    return ops;
}

}  // namespace

TEST(BuildSampled, ScalarSurrogate) {
    const auto sys = build_sampled(scalar_ops(-1.0), std::log(2.0));
    EXPECT_NEAR(sys.Ahat.blocks[0](0, 0), 0.5, 1e-15);
    EXPECT_NEAR(sys.Bhat[0], 0.5, 1e-15);
}

TEST(BuildSampled, SmallTauLimit) {
    const RhoParams r{0.2, 1.4, 0.66, 1.34, 0.8, 1.0, 0.2, 0.05, 0.1};
    const auto ops = assemble({6, 2, 2, 0.1}, r);
    const double tau = 1e-7;
    const auto sys = build_sampled(ops, tau);
    const Eigen::MatrixXd a = sys.Ahat.dense(), agen = sys.Agen.dense();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    // Ahat = I + tau Agen + O(tau^2), Bhat = tau beta + O(tau^2).
    EXPECT_LT(((a - id) / tau - agen).norm() / agen.norm(), 1e-4);
    const Eigen::VectorXd beta = ops.M.dense().llt().solve(ops.B);
    EXPECT_LT((sys.Bhat / tau - beta).norm() / beta.norm(), 1e-4);
    EXPECT_THROW(build_sampled(ops, 0.0), DomainError);
}

TEST(BuildSampled, BhatMatchesQuadrature) {
    std::mt19937_64 gen(31);
    const GridSpec spec{8, 2, 2, 1.0 / 12.0};
    const auto rule = oracle::golub_welsch(64);
    for (int i = 0; i < 5; ++i) {
        const auto ops = assemble(spec, oracle::random_rho(gen));
        const auto sys = build_sampled(ops, spec.tau);
        const int bs = spec.block_size();
        for (int c = 0; c < spec.cell_count(); ++c) {
            const Eigen::MatrixXd& agen = sys.Agen.blocks[c];
            const Eigen::VectorXd beta = ops.M.blocks[c].llt().solve(ops.B.segment(c * bs, bs));
            Eigen::VectorXd integral = Eigen::VectorXd::Zero(bs);
            for (std::size_t k = 0; k < rule.x.size(); ++k)
                integral += rule.w[k] * spec.tau * oracle::taylor_exp(agen * rule.x[k] * spec.tau) * beta;
            const Eigen::VectorXd bhat = sys.Bhat.segment(c * bs, bs);
            EXPECT_LT((bhat - integral).norm() / integral.norm(), 1e-9);
        }
    }
}

TEST(BuildSampled, SemigroupAndStability) {
    std::mt19937_64 gen(32);
    const GridSpec spec{8, 3, 3, 1.0 / 12.0};
    for (int i = 0; i < 20; ++i) {
        const auto ops = assemble(spec, oracle::random_rho(gen));
        const auto s1 = build_sampled(ops, spec.tau);
        const auto s2 = build_sampled(ops, 2 * spec.tau);
        for (int c = 0; c < spec.cell_count(); ++c) {
            const Eigen::MatrixXd sq = s1.Ahat.blocks[c] * s1.Ahat.blocks[c];
            EXPECT_LT((sq - s2.Ahat.blocks[c]).norm() / s2.Ahat.blocks[c].norm(), 1e-9);
            EXPECT_LT(s1.Ahat.blocks[c].eigenvalues().cwiseAbs().maxCoeff(), 1.0);
        }
    }
}

TEST(BuildSampled, MatchesIndependentExponential) {
    const RhoParams r{0.2, 1.4, 0.66, 1.34, 0.8, 1.0, 0.2, 0.05, 0.1};
    const GridSpec spec{6, 2, 2, 0.25};
    const auto sys = build_sampled(assemble(spec, r), spec.tau);
    for (int c = 0; c < spec.cell_count(); ++c) {
        const Eigen::MatrixXd ref = oracle::taylor_exp(sys.Agen.blocks[c] * spec.tau);
        EXPECT_LT((sys.Ahat.blocks[c] - ref).norm() / ref.norm(), 1e-12);
    }
}

TEST(AugmentedExp, ScalarDerivative) {
    const double a = -0.7, tau = 0.3;
    Eigen::MatrixXd am(1, 1), dm(1, 1);
    am << a;
    dm << 1.0;
    const auto [d, e] = augmented_exp(am, dm, tau);
    EXPECT_NEAR(d(0, 0), tau * std::exp(a * tau), 1e-15);
    EXPECT_NEAR(e(0, 0), std::exp(a * tau), 1e-15);
}

TEST(AugmentedExp, LowerRightIsAhat) {
    const RhoParams r{0.2, 1.4, 0.66, 1.34, 0.8, 1.0, 0.2, 0.05, 0.1};
    const GridSpec spec{8, 2, 2, 1.0 / 12.0};
    const auto sys = build_sampled(assemble(spec, r), spec.tau);
    const Eigen::MatrixXd& a = sys.Agen.blocks[1];
    const Eigen::MatrixXd d = Eigen::MatrixXd::Random(a.rows(), a.cols());
    const auto [upper, lower] = augmented_exp(a, d, spec.tau);
    EXPECT_LT((lower - sys.Ahat.blocks[1]).norm() / sys.Ahat.blocks[1].norm(), 1e-10);
}

TEST(Sensitivities, ZeroGeneratorDerivativeGivesExactZero) {
    // l21 = 0 with mu2 centred and m2 = 1: the q1-moments do not depend on mu2,
    // so dAgen/dmu2 vanishes; build_sensitivities must then return exact zeros.
    const RhoParams r{0.5, 1.5, 0.5, 1.5, 1.0, 1.0, 0.3, 0.0, 0.3};
    const GridSpec spec{4, 2, 1, 0.1};
    AssemblyOptions opts;
    auto moments = population_moments(spec, r, opts, true);
    for (auto& c : moments.cells) {
        c.dw[kMu2] = 0.0;
        c.dw1[kMu2] = 0.0;
    }
    const auto ops = operators_from_moments(spec.n, moments);
    SampledSystem sys = build_sampled(ops, spec.tau);
    build_sensitivities(ops, gradients_from_moments(spec.n, moments), sys);
    for (const auto& b : sys.dAhat[kMu2].blocks) EXPECT_TRUE(b.isZero(0.0));
}

TEST(Sensitivities, MatchFiniteDifferences) {
    std::mt19937_64 gen(33);
    const GridSpec spec{5, 2, 2, 1.0 / 12.0};
    for (int i = 0; i < 3; ++i) {
        const RhoParams r = oracle::random_rho(gen);
        const auto ops = assemble(spec, r);
        SampledSystem sys = build_sampled(ops, spec.tau);
        build_sensitivities(ops, assemble_grad(spec, r), sys);
        const auto base = r.to_array();
        for (int k = 0; k < kRhoDim; ++k) {
            const double h = 1e-6 * (1.0 + std::abs(base[k]));
            auto p = base, m = base;
            p[k] += h;
            m[k] -= h;
            const auto sp = build_sampled(assemble(spec, RhoParams::from_array(p)), spec.tau);
            const auto sm = build_sampled(assemble(spec, RhoParams::from_array(m)), spec.tau);
            const Eigen::MatrixXd fa = (sp.Ahat.dense() - sm.Ahat.dense()) / (2 * h);
            const Eigen::VectorXd fb = (sp.Bhat - sm.Bhat) / (2 * h);
            const Eigen::VectorXd fc = (sp.Chat - sm.Chat) / (2 * h);
            EXPECT_LT((sys.dAhat[k].dense() - fa).norm() / std::max(fa.norm(), 1e-8), 1e-5)
                << kRhoNames[k];
            EXPECT_LT((sys.dBhat[k] - fb).norm() / std::max(fb.norm(), 1e-8), 1e-5) << kRhoNames[k];
            EXPECT_LT((sys.dChat[k] - fc).norm() / std::max(fc.norm(), 1e-8), 1e-5) << kRhoNames[k];
        }
    }
}

TEST(MatrixExp, RejectsNonFinite) {
    Eigen::MatrixXd a(1, 1);
    a << std::nan("");
    EXPECT_THROW(matrix_exp(a), ConditioningError);
    a << 1e6;
    EXPECT_THROW(matrix_exp(a), ConditioningError);
}
