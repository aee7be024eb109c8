#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/density.hpp"
#include "popdiff/errors.hpp"
#include "popdiff/grid_basis.hpp"
#include "popdiff/quadrature.hpp"

namespace popdiff {

inline constexpr int kDefaultCellQuadOrder = 8;
/// f must stay above kGammaFloorScale / area(box) at every cell quadrature node.
inline constexpr double kGammaFloorScale = 1e-10;

/// Square block-diagonal matrix stored as its diagonal blocks.
struct BlockDiagonal {
    int block_size = 0;
    std::vector<Eigen::MatrixXd> blocks;

    static BlockDiagonal zero(int block_size, int block_count) {
        return {block_size,
                std::vector<Eigen::MatrixXd>(block_count,
                                             Eigen::MatrixXd::Zero(block_size, block_size))};
    }

    int block_count() const { return static_cast<int>(blocks.size()); }
    int rows() const { return block_size * block_count(); }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows(), rows());
        for (int b = 0; b < block_count(); ++b)
            d.block(b * block_size, b * block_size, block_size, block_size) = blocks[b];
        return d;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y(rows());
        for (int b = 0; b < block_count(); ++b)
            y.segment(b * block_size, block_size).noalias() =
                blocks[b] * x.segment(b * block_size, block_size);
        return y;
    }

    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y(rows());
        for (int b = 0; b < block_count(); ++b)
            y.segment(b * block_size, block_size).noalias() =
                blocks[b].transpose() * x.segment(b * block_size, block_size);
        return y;
    }
};

/// Per-cell density moments: w = int_cell f, w1 = int_cell q1 f, w2 = int_cell q2 f,
/// each with its gradient in the model parameters.
struct CellMoment {
    double w = 0.0, w1 = 0.0, w2 = 0.0;
    std::vector<double> dw, dw1, dw2;
};

struct CellMoments {
    int param_count = 0;
    std::vector<CellMoment> cells;  // ordered by cell_index
};

struct AssemblyOptions {
    int quad_order = kDefaultCellQuadOrder;
    bool enforce_gamma_floor = true;
};

/// Density-weighted Galerkin operators. M and K share the per-cell block
/// structure; B is supported on eta-node n of every cell, C on eta-node 0.
struct AssembledOperators {
    int n = 0;
    BlockDiagonal M, K;
    Eigen::VectorXd B, C;

    int dimension() const { return M.rows(); }
};

struct OperatorGradients {
    std::vector<BlockDiagonal> dM, dK;
    std::vector<Eigen::VectorXd> dB, dC;

    int param_count() const { return static_cast<int>(dM.size()); }
};

/// Truncated-normal cell moments. The normalization is the sum of the cell
/// integrals, so the weights sum to one under the cell quadrature.
inline CellMoments population_moments(const GridSpec& spec, const RhoParams& rho,
                                      const AssemblyOptions& opts, bool with_grad) {
    spec.validate();
    rho.validate();
    const auto& rule = gauss_legendre(opts.quad_order);
    std::vector<RectMoments> raw(spec.cell_count());
    double z = 0.0;
    RhoVector dz{};
    double min_phi = std::numeric_limits<double>::infinity();
    for (int j2 = 1; j2 <= spec.m2; ++j2) {
        for (int j1 = 1; j1 <= spec.m1; ++j1) {
            const int c = cell_index(j1, j2, spec);
            raw[c] = integrate_rect(rho, static_cast<double>(j1 - 1) / spec.m1,
                                    static_cast<double>(j1) / spec.m1,
                                    static_cast<double>(j2 - 1) / spec.m2,
                                    static_cast<double>(j2) / spec.m2, rule, with_grad);
            z += raw[c].value[0];
            for (int k = 0; k < kRhoDim; ++k) dz[k] += raw[c].grad[0][k];
            min_phi = std::min(min_phi, raw[c].min_phi);
        }
    }
    if (!(z >= kNormalizationFloor)) {
        std::ostringstream os;
        os << "cell-quadrature normalization " << z << " below floor";
        throw DegenerateDensity(os.str());
    }
    if (opts.enforce_gamma_floor) {
        const double floor = kGammaFloorScale / rho.box().area();
        if (!(min_phi / z >= floor)) {
            std::ostringstream os;
            os << "density minimum " << min_phi / z << " at cell nodes below gamma floor " << floor;
            throw DegenerateDensity(os.str());
        }
    }

    CellMoments out;
    out.param_count = with_grad ? kRhoDim : 0;
    out.cells.resize(spec.cell_count());
    for (int c = 0; c < spec.cell_count(); ++c) {
        auto& cell = out.cells[c];
        const auto& r = raw[c];
        cell.w = r.value[0] / z;
        cell.w1 = r.value[1] / z;
        cell.w2 = r.value[2] / z;
        if (!with_grad) continue;
        cell.dw.resize(kRhoDim);
        cell.dw1.resize(kRhoDim);
        cell.dw2.resize(kRhoDim);
        // d(I/Z) = (dI - (I/Z) dZ) / Z
        for (int k = 0; k < kRhoDim; ++k) {
            cell.dw[k] = (r.grad[0][k] - cell.w * dz[k]) / z;
            cell.dw1[k] = (r.grad[1][k] - cell.w1 * dz[k]) / z;
            cell.dw2[k] = (r.grad[2][k] - cell.w2 * dz[k]) / z;
        }
    }
    return out;
}

/// Moments of a point mass at q: one cell, gradient with respect to (q1, q2).
inline CellMoments point_moments(const QPoint& q) {
    if (!(q.q1 > 0.0) || !std::isfinite(q.q2))
        throw InvalidParameter("deterministic model requires q1 > 0 and finite q2");
    CellMoments out;
    out.param_count = 2;
    CellMoment cell;
    cell.w = 1.0;
    cell.w1 = q.q1;
    cell.w2 = q.q2;
    cell.dw = {0.0, 0.0};
    cell.dw1 = {1.0, 0.0};
    cell.dw2 = {0.0, 1.0};
    out.cells.push_back(cell);
    return out;
}

/// Uniform density on a box (test fixture family; no parameter gradient).
inline CellMoments uniform_moments(const GridSpec& spec, const QBox& box) {
    CellMoments out;
    out.cells.resize(spec.cell_count());
    for (int j2 = 1; j2 <= spec.m2; ++j2) {
        for (int j1 = 1; j1 <= spec.m1; ++j1) {
            const auto [lo1, hi1] = qcell_bounds(1, j1, box, spec.m1);
            const auto [lo2, hi2] = qcell_bounds(2, j2, box, spec.m2);
            auto& cell = out.cells[cell_index(j1, j2, spec)];
            cell.w = (hi1 - lo1) * (hi2 - lo2) / box.area();
            cell.w1 = cell.w * 0.5 * (lo1 + hi1);
            cell.w2 = cell.w * 0.5 * (lo2 + hi2);
        }
    }
    return out;
}

/// Galerkin blocks from cell moments: M_c = w M_eta, K_c = w e0 e0^T + w1 K_eta,
/// B_c = w2 e_n, C_c = w e_0.
inline AssembledOperators operators_from_moments(int n, const CellMoments& moments) {
    const Eigen::MatrixXd mass = hat_mass(n);
    const Eigen::MatrixXd stiff = hat_stiffness(n);
    const int bs = n + 1;
    const int cells = static_cast<int>(moments.cells.size());
    AssembledOperators ops;
    ops.n = n;
    ops.M = BlockDiagonal::zero(bs, cells);
    ops.K = BlockDiagonal::zero(bs, cells);
    ops.B = Eigen::VectorXd::Zero(bs * cells);
    ops.C = Eigen::VectorXd::Zero(bs * cells);
    for (int c = 0; c < cells; ++c) {
        const auto& m = moments.cells[c];
        ops.M.blocks[c] = m.w * mass;
        ops.K.blocks[c] = m.w1 * stiff;
        ops.K.blocks[c](0, 0) += m.w;
        ops.B[c * bs + n] = m.w2;
        ops.C[c * bs] = m.w;
    }
    return ops;
}

inline OperatorGradients gradients_from_moments(int n, const CellMoments& moments) {
    const Eigen::MatrixXd mass = hat_mass(n);
    const Eigen::MatrixXd stiff = hat_stiffness(n);
    const int bs = n + 1;
    const int cells = static_cast<int>(moments.cells.size());
    const int p = moments.param_count;
    OperatorGradients g;
    g.dM.assign(p, BlockDiagonal::zero(bs, cells));
    g.dK.assign(p, BlockDiagonal::zero(bs, cells));
    g.dB.assign(p, Eigen::VectorXd::Zero(bs * cells));
    g.dC.assign(p, Eigen::VectorXd::Zero(bs * cells));
    for (int k = 0; k < p; ++k) {
        for (int c = 0; c < cells; ++c) {
            const auto& m = moments.cells[c];
            g.dM[k].blocks[c] = m.dw[k] * mass;
            g.dK[k].blocks[c] = m.dw1[k] * stiff;
            g.dK[k].blocks[c](0, 0) += m.dw[k];
            g.dB[k][c * bs + n] = m.dw2[k];
            g.dC[k][c * bs] = m.dw[k];
        }
    }
    return g;
}

inline AssembledOperators assemble(const GridSpec& spec, const RhoParams& rho,
                                   const AssemblyOptions& opts = {}) {
    return operators_from_moments(spec.n, population_moments(spec, rho, opts, false));
}

inline OperatorGradients assemble_grad(const GridSpec& spec, const RhoParams& rho,
                                       const AssemblyOptions& opts = {}) {
    return gradients_from_moments(spec.n, population_moments(spec, rho, opts, true));
}

}  // namespace popdiff
