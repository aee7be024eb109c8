#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "popdiff/assembly.hpp"
#include "popdiff/errors.hpp"
#include "popdiff/parallel.hpp"

namespace popdiff {

/// exp(A) by scaling and squaring with a Pade approximant (Eigen's
/// MatrixFunctions implementation).
inline Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a) {
    if (!a.allFinite()) throw ConditioningError("matrix exponential of a non-finite matrix");
    Eigen::MatrixXd e = a.exp();
    if (!e.allFinite()) throw ConditioningError("matrix exponential overflowed");
    return e;
}

/// (Ahat, Bhat) for generator `agen` and input direction `beta` over one
/// sampling interval: Ahat = exp(agen tau), Bhat = (Ahat - I) agen^{-1} beta.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> sampled_pair(const Eigen::MatrixXd& agen,
                                                                const Eigen::VectorXd& beta,
                                                                double tau) {
    Eigen::MatrixXd ahat = matrix_exp(agen * tau);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(agen);
    if (!lu.isInvertible()) throw SingularOperator("generator is singular");
    Eigen::MatrixXd shifted = ahat;
    shifted.diagonal().array() -= 1.0;
    Eigen::VectorXd bhat = shifted * lu.solve(beta);
    return {std::move(ahat), std::move(bhat)};
}

/// Upper-right and lower-right blocks of exp([[A, dA], [0, A]] tau): the
/// directional derivative of exp(A tau) along dA, and exp(A tau) itself.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> augmented_exp(const Eigen::MatrixXd& agen,
                                                                 const Eigen::MatrixXd& dagen,
                                                                 double tau) {
    const Eigen::Index s = agen.rows();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * s, 2 * s);
    aug.topLeftCorner(s, s) = agen * tau;
    aug.topRightCorner(s, s) = dagen * tau;
    aug.bottomRightCorner(s, s) = agen * tau;
    const Eigen::MatrixXd e = matrix_exp(aug);
    return {e.topRightCorner(s, s), e.bottomRightCorner(s, s)};
}

/// Sampled-time population system x_{j+1} = Ahat x_j + Bhat u_j, y_j = Chat x_j.
struct SampledSystem {
    double tau = 0.0;
    BlockDiagonal Agen, Ahat;
    Eigen::VectorXd Bhat, Chat;
    std::vector<BlockDiagonal> dAhat;
    std::vector<Eigen::VectorXd> dBhat, dChat;

    int dimension() const { return Ahat.rows(); }
    bool has_sensitivities() const { return !dAhat.empty(); }
};

inline SampledSystem build_sampled(const AssembledOperators& ops, double tau) {
    if (!(tau > 0.0)) throw DomainError("sampling interval must be positive");
    const int bs = ops.M.block_size;
    const int cells = ops.M.block_count();
    SampledSystem sys;
    sys.tau = tau;
    sys.Agen = BlockDiagonal::zero(bs, cells);
    sys.Ahat = BlockDiagonal::zero(bs, cells);
    sys.Bhat = Eigen::VectorXd::Zero(ops.dimension());
    sys.Chat = ops.C;
    parallel_for(cells, [&](int c) {
        Eigen::LLT<Eigen::MatrixXd> mass(ops.M.blocks[c]);
        if (mass.info() != Eigen::Success)
            throw SingularOperator("mass block is not positive definite");
        sys.Agen.blocks[c] = -mass.solve(ops.K.blocks[c]);
        const Eigen::VectorXd beta = mass.solve(ops.B.segment(c * bs, bs));
        auto [ahat, bhat] = sampled_pair(sys.Agen.blocks[c], beta, tau);
        sys.Ahat.blocks[c] = std::move(ahat);
        sys.Bhat.segment(c * bs, bs) = bhat;
    });
    return sys;
}

/// Fills dAhat, dBhat, dChat. dAgen = -M^{-1}(dK + dM Agen); dAhat comes from
/// the augmented exponential; dBhat differentiates (Ahat - I) Agen^{-1} M^{-1} B.
inline void build_sensitivities(const AssembledOperators& ops, const OperatorGradients& grads,
                                SampledSystem& sys) {
    const int bs = ops.M.block_size;
    const int cells = ops.M.block_count();
    const int p = grads.param_count();
    sys.dAhat.assign(p, BlockDiagonal::zero(bs, cells));
    sys.dBhat.assign(p, Eigen::VectorXd::Zero(ops.dimension()));
    sys.dChat = grads.dC;

    struct BlockCache {
        Eigen::LLT<Eigen::MatrixXd> mass;
        Eigen::PartialPivLU<Eigen::MatrixXd> agen;
        Eigen::VectorXd beta, agen_inv_beta;
        Eigen::MatrixXd shifted;  // Ahat - I
    };
    std::vector<BlockCache> cache(cells);
    parallel_for(cells, [&](int c) {
        auto& bc = cache[c];
        bc.mass.compute(ops.M.blocks[c]);
        if (bc.mass.info() != Eigen::Success)
            throw SingularOperator("mass block is not positive definite");
        bc.agen.compute(sys.Agen.blocks[c]);
        bc.beta = bc.mass.solve(ops.B.segment(c * bs, bs));
        bc.agen_inv_beta = bc.agen.solve(bc.beta);
        bc.shifted = sys.Ahat.blocks[c];
        bc.shifted.diagonal().array() -= 1.0;
    });

    parallel_for(cells * p, [&](int task) {
        const int c = task % cells;
        const int k = task / cells;
        const auto& bc = cache[c];
        const Eigen::MatrixXd& agen = sys.Agen.blocks[c];
        const Eigen::MatrixXd dagen =
            -bc.mass.solve(grads.dK[k].blocks[c] + grads.dM[k].blocks[c] * agen);
        Eigen::MatrixXd dahat;
        if (dagen.isZero(0.0)) {
            dahat = Eigen::MatrixXd::Zero(bs, bs);
        } else {
            dahat = augmented_exp(agen, dagen, sys.tau).first;
        }
        const Eigen::VectorXd dbeta =
            bc.mass.solve(grads.dB[k].segment(c * bs, bs) - grads.dM[k].blocks[c] * bc.beta);
        Eigen::VectorXd dbhat = dahat * bc.agen_inv_beta;
        dbhat -= bc.shifted * bc.agen.solve(dagen * bc.agen_inv_beta);
        dbhat += bc.shifted * bc.agen.solve(dbeta);
        sys.dAhat[k].blocks[c] = std::move(dahat);
        sys.dBhat[k].segment(c * bs, bs) = dbhat;
    });
}

}  // namespace popdiff
