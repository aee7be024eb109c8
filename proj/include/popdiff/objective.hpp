#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/assembly.hpp"
#include "popdiff/density.hpp"
#include "popdiff/forward.hpp"
#include "popdiff/parallel.hpp"
#include "popdiff/sampled_system.hpp"

namespace popdiff {

enum class GradientMethod { adjoint, finite_difference };

inline const char* to_string(GradientMethod m) {
    return m == GradientMethod::adjoint ? "adjoint" : "finite-difference";
}

struct EpisodeCost {
    std::string id;
    double cost = 0.0;
};

/// Naive-pooled least-squares cost with unit weights and its gradient.
struct CostReport {
    double cost = 0.0;
    std::vector<double> grad;
    std::vector<EpisodeCost> per_episode;
    GradientMethod method = GradientMethod::adjoint;
};

struct ObjectiveOptions {
    AssemblyOptions assembly;
};

inline void check_episodes(const GridSpec& spec, const std::vector<Episode>& episodes) {
    for (const auto& ep : episodes) {
        ep.validate();
        if (std::abs(ep.tau - spec.tau) > 1e-12 * spec.tau)
            throw DomainError("episode " + ep.id + ": sampling interval differs from grid tau");
    }
}

namespace detail {

template <class Fn>
auto with_episode_context(const Episode& ep, Fn&& fn) {
    try {
        return fn();
    } catch (const SimulationDivergence& e) {
        throw SimulationDivergence("episode " + ep.id + ": " + e.what());
    }
}

}  // namespace detail

/// Sum of squared residuals over every episode, j = 0..mu included.
inline double system_cost(const SampledSystem& sys, const std::vector<Episode>& episodes,
                          std::vector<EpisodeCost>* per_episode = nullptr) {
    std::vector<double> costs(episodes.size());
    parallel_for(static_cast<int>(episodes.size()), [&](int i) {
        const auto& ep = episodes[i];
        const Trajectory traj =
            detail::with_episode_context(ep, [&] { return simulate(sys, ep.u, false); });
        const Eigen::Map<const Eigen::VectorXd> obs(ep.y_obs.data(),
                                                    static_cast<Eigen::Index>(ep.y_obs.size()));
        costs[i] = (traj.y - obs).squaredNorm();
    });
    double total = 0.0;
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        total += costs[i];
        if (per_episode) per_episode->push_back({episodes[i].id, costs[i]});
    }
    return total;
}

/// Cost and gradient by the discrete adjoint recursion
///   z_mu = v_mu,  z_{j-1} = Ahat^T z_j + v_{j-1},  v_j = 2 (Chat x_j - y_j) Chat^T,
///   dJ/dp = sum_{j>=1} z_j^T (dAhat x_{j-1} + dBhat u_{j-1}) + sum_{j>=0} 2 r_j dChat x_j.
/// `sys` must carry sensitivities.
inline CostReport adjoint_cost_gradient(const SampledSystem& sys,
                                        const std::vector<Episode>& episodes) {
    if (!sys.has_sensitivities()) throw DomainError("adjoint gradient needs sensitivities");
    const int p = static_cast<int>(sys.dAhat.size());
    const int dim = sys.dimension();
    const int bs = sys.Ahat.block_size;
    const int cells = sys.Ahat.block_count();

    struct Partial {
        double cost = 0.0;
        std::vector<double> grad;
    };
    std::vector<Partial> partial(episodes.size());
    parallel_for(static_cast<int>(episodes.size()), [&](int i) {
        const auto& ep = episodes[i];
        const int steps = ep.steps();
        const Trajectory traj =
            detail::with_episode_context(ep, [&] { return simulate(sys, ep.u, true); });
        Eigen::VectorXd resid(steps + 1);
        for (int j = 0; j <= steps; ++j) resid[j] = traj.y[j] - ep.y_obs[j];

        // Adjoint states z_1..z_mu stored as columns 0..mu-1.
        Eigen::MatrixXd zs(dim, steps);
        Eigen::VectorXd z = 2.0 * resid[steps] * sys.Chat;
        for (int j = steps; j >= 1; --j) {
            zs.col(j - 1) = z;
            z = sys.Ahat.apply_transpose(z);
            z.noalias() += 2.0 * resid[j - 1] * sys.Chat;
        }
        const Eigen::Map<const Eigen::VectorXd> u(ep.u.data(), steps);
        const Eigen::VectorXd zu = zs * u;                           // sum_j z_j u_{j-1}
        const Eigen::VectorXd xr = traj.states * (2.0 * resid);      // sum_j 2 r_j x_j
        const auto xprev = traj.states.leftCols(steps);              // x_0..x_{mu-1}

        Partial& out = partial[i];
        out.cost = resid.squaredNorm();
        out.grad.assign(p, 0.0);
        for (int c = 0; c < cells; ++c) {
            const Eigen::MatrixXd g =
                zs.middleRows(c * bs, bs) * xprev.middleRows(c * bs, bs).transpose();
            for (int k = 0; k < p; ++k) out.grad[k] += sys.dAhat[k].blocks[c].cwiseProduct(g).sum();
        }
        for (int k = 0; k < p; ++k) out.grad[k] += sys.dBhat[k].dot(zu) + sys.dChat[k].dot(xr);
    });

    CostReport report;
    report.method = GradientMethod::adjoint;
    report.grad.assign(p, 0.0);
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        report.cost += partial[i].cost;
        report.per_episode.push_back({episodes[i].id, partial[i].cost});
        for (int k = 0; k < p; ++k) report.grad[k] += partial[i].grad[k];
    }
    return report;
}

inline double cost(const RhoParams& rho, const GridSpec& spec, const std::vector<Episode>& episodes,
                   const ObjectiveOptions& opts = {}) {
    check_episodes(spec, episodes);
    const SampledSystem sys = build_sampled(assemble(spec, rho, opts.assembly), spec.tau);
    return system_cost(sys, episodes);
}

inline CostReport gradient_adjoint(const RhoParams& rho, const GridSpec& spec,
                                   const std::vector<Episode>& episodes,
                                   const ObjectiveOptions& opts = {}) {
    check_episodes(spec, episodes);
    const CellMoments moments = population_moments(spec, rho, opts.assembly, true);
    const AssembledOperators ops = operators_from_moments(spec.n, moments);
    const OperatorGradients grads = gradients_from_moments(spec.n, moments);
    SampledSystem sys = build_sampled(ops, spec.tau);
    build_sensitivities(ops, grads, sys);
    return adjoint_cost_gradient(sys, episodes);
}

/// Central differences with step h_k = step (1 + |rho_k|); one-sided where a
/// central stencil would leave the feasible set.
inline CostReport gradient_fd(const RhoParams& rho, const GridSpec& spec,
                              const std::vector<Episode>& episodes, double step = 1e-6,
                              const ObjectiveOptions& opts = {}) {
    if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
    CostReport report;
    report.method = GradientMethod::finite_difference;
    check_episodes(spec, episodes);
    report.cost = system_cost(build_sampled(assemble(spec, rho, opts.assembly), spec.tau),
                              episodes, &report.per_episode);
    const RhoVector base = rho.to_array();
    report.grad.assign(kRhoDim, 0.0);
    for (int k = 0; k < kRhoDim; ++k) {
        const double h = step * (1.0 + std::abs(base[k]));
        RhoVector plus = base, minus = base;
        plus[k] += h;
        minus[k] -= h;
        const bool plus_ok = RhoParams::from_array(plus).valid();
        const bool minus_ok = RhoParams::from_array(minus).valid();
        auto eval = [&](const RhoVector& v) {
            return cost(RhoParams::from_array(v), spec, episodes, opts);
        };
        if (plus_ok && minus_ok) {
            report.grad[k] = (eval(plus) - eval(minus)) / (2.0 * h);
        } else if (plus_ok) {
            report.grad[k] = (eval(plus) - report.cost) / h;
        } else if (minus_ok) {
            report.grad[k] = (report.cost - eval(minus)) / h;
        } else {
            throw InvalidParameter("no feasible finite-difference stencil for " +
                                   std::string(kRhoNames[k]));
        }
    }
    return report;
}

}  // namespace popdiff
