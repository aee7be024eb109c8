#include <gtest/gtest.h>

#include "popdiff/grid_basis.hpp"

using namespace popdiff;

TEST(HatEval, NodalValues) {
    EXPECT_DOUBLE_EQ(hat_eval(0, 4, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(hat_eval(2, 4, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(hat_eval(2, 4, 0.375), 0.5);
    EXPECT_DOUBLE_EQ(hat_eval(2, 4, 0.75), 0.0);
    EXPECT_DOUBLE_EQ(hat_eval(4, 4, 1.0), 1.0);
}

TEST(HatEval, RejectsOutOfRange) {
    EXPECT_THROW(hat_eval(0, 4, -0.1), DomainError);
    EXPECT_THROW(hat_eval(0, 4, 1.1), DomainError);
    EXPECT_THROW(hat_eval(5, 4, 0.5), DomainError);
    EXPECT_THROW(hat_eval(-1, 4, 0.5), DomainError);
}

TEST(HatEval, PartitionOfUnity) {
    for (int n : {1, 3, 8, 17}) {
        for (int k = 0; k <= 1000; ++k) {
            const double eta = k / 1000.0;
            double s = 0.0;
            for (int j = 0; j <= n; ++j) s += hat_eval(j, n, eta);
            EXPECT_NEAR(s, 1.0, 1e-14) << "n=" << n << " eta=" << eta;
        }
    }
}

TEST(QCellBounds, Examples) {
    const QBox box{1.0, 3.0, 0.5, 0.5001};
    auto c1 = qcell_bounds(1, 1, box, 2);
    auto c2 = qcell_bounds(1, 2, box, 2);
    EXPECT_DOUBLE_EQ(c1.first, 1.0);
    EXPECT_DOUBLE_EQ(c1.second, 2.0);
    EXPECT_DOUBLE_EQ(c2.first, 2.0);
    EXPECT_DOUBLE_EQ(c2.second, 3.0);
    auto c3 = qcell_bounds(2, 1, box, 1);
    EXPECT_DOUBLE_EQ(c3.first, 0.5);
    EXPECT_DOUBLE_EQ(c3.second, 0.5001);
    EXPECT_THROW(qcell_bounds(1, 0, box, 2), DomainError);
    EXPECT_THROW(qcell_bounds(1, 3, box, 2), DomainError);
    EXPECT_THROW(qcell_bounds(3, 1, box, 2), DomainError);
}

TEST(QCellBounds, CellsTileTheInterval) {
    const QBox box{0.3, 1.7, 0.1, 2.9};
    for (int axis : {1, 2}) {
        for (int m : {1, 3, 7}) {
            EXPECT_EQ(qcell_bounds(axis, 1, box, m).first, box.lower(axis));
            EXPECT_EQ(qcell_bounds(axis, m, box, m).second, box.upper(axis));
            for (int j = 1; j < m; ++j)
                EXPECT_EQ(qcell_bounds(axis, j, box, m).second,
                          qcell_bounds(axis, j + 1, box, m).first);
        }
    }
}

TEST(FlatIndex, Examples) {
    const GridSpec spec{1, 2, 2, 0.1};
    EXPECT_EQ(flat_index({0, 1, 1}, spec), 0);
    EXPECT_EQ(flat_index({1, 1, 1}, spec), 1);
    EXPECT_EQ(flat_index({0, 2, 2}, spec), 6);
    EXPECT_THROW(flat_index({2, 1, 1}, spec), DomainError);
    EXPECT_THROW(flat_index({0, 3, 1}, spec), DomainError);
}

TEST(FlatIndex, BijectionWithInverse) {
    const GridSpec spec{3, 4, 5, 0.1};
    std::vector<bool> hit(spec.dimension(), false);
    for (int j2 = 1; j2 <= spec.m2; ++j2)
        for (int j1 = 1; j1 <= spec.m1; ++j1)
            for (int j = 0; j <= spec.n; ++j) {
                const MultiIndex mi{j, j1, j2};
                const int f = flat_index(mi, spec);
                ASSERT_GE(f, 0);
                ASSERT_LT(f, spec.dimension());
                EXPECT_FALSE(hit[f]);
                hit[f] = true;
                EXPECT_EQ(multi_index(f, spec), mi);
            }
    EXPECT_THROW(multi_index(spec.dimension(), spec), DomainError);
}

TEST(GridSpec, Validation) {
    EXPECT_EQ((GridSpec{8, 4, 4, 0.1}).dimension(), 9 * 16);
    EXPECT_THROW((GridSpec{0, 1, 1, 0.1}).validate(), DomainError);
    EXPECT_THROW((GridSpec{1, 1, 0, 0.1}).validate(), DomainError);
    EXPECT_THROW((GridSpec{1, 1, 1, 0.0}).validate(), DomainError);
}

TEST(HatMatrices, ClosedForms) {
    const int n = 4;
    const Eigen::MatrixXd m = hat_mass(n), k = hat_stiffness(n);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.0 / (3 * n));
    EXPECT_DOUBLE_EQ(m(2, 2), 2.0 / (3 * n));
    EXPECT_DOUBLE_EQ(m(1, 2), 1.0 / (6 * n));
    EXPECT_DOUBLE_EQ(k(0, 0), n);
    EXPECT_DOUBLE_EQ(k(2, 2), 2.0 * n);
    EXPECT_DOUBLE_EQ(k(1, 2), -n);
    // Mass of the constant function 1 is 1; constants lie in the stiffness kernel.
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n + 1);
    EXPECT_NEAR(one.dot(m * one), 1.0, 1e-15);
    EXPECT_NEAR((k * one).norm(), 0.0, 1e-14);
}
