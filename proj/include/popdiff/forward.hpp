#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/assembly.hpp"
#include "popdiff/density.hpp"
#include "popdiff/parallel.hpp"
#include "popdiff/sampled_system.hpp"

namespace popdiff {

/// One drinking episode on a uniform tau-grid: u[j] is the zero-order-hold
/// input on [j tau, (j+1) tau), y_obs[j] the observation at j tau. x0 = 0.
struct Episode {
    std::string id;
    double tau = 1.0 / 12.0;
    double t0 = 0.0;  // clock time of grid node 0, hours
    std::vector<double> u;
    std::vector<double> y_obs;

    int steps() const { return static_cast<int>(u.size()); }

    void validate() const {
        if (!(tau > 0.0)) throw DomainError("episode " + id + ": tau must be positive");
        if (y_obs.size() != u.size() + 1)
            throw DomainError("episode " + id + ": need length(y_obs) = length(u) + 1");
        for (double v : u)
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError("episode " + id + ": input must be finite and nonnegative");
        for (double v : y_obs)
            if (!std::isfinite(v))
                throw DomainError("episode " + id + ": observations must be finite");
    }
};

struct Trajectory {
    Eigen::VectorXd y;       // outputs j = 0..mu
    Eigen::MatrixXd states;  // column j is x_j (empty unless requested)
};

inline Trajectory simulate(const SampledSystem& sys, std::span<const double> u,
                           bool keep_states = true) {
    const int dim = sys.dimension();
    const int steps = static_cast<int>(u.size());
    Trajectory out;
    out.y.resize(steps + 1);
    if (keep_states) out.states.resize(dim, steps + 1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    for (int j = 0; j <= steps; ++j) {
        out.y[j] = sys.Chat.dot(x);
        if (keep_states) out.states.col(j) = x;
        if (j == steps) break;
        Eigen::VectorXd next = sys.Ahat.apply(x);
        next.noalias() += sys.Bhat * u[j];
        x.swap(next);
        if (!x.allFinite())
            throw SimulationDivergence("non-finite state at step " + std::to_string(j + 1));
    }
    return out;
}

/// Single-q sampled system: hat-basis matrices with f replaced by a point mass.
inline SampledSystem deterministic_system(const QPoint& q, int n, double tau) {
    return build_sampled(operators_from_moments(n, point_moments(q)), tau);
}

inline Eigen::VectorXd simulate_deterministic(const QPoint& q, int n, double tau,
                                              std::span<const double> u) {
    return simulate(deterministic_system(q, n, tau), u, false).y;
}

struct PopulationComparison {
    Eigen::VectorXd population;
    Eigen::VectorXd mc_mean;
    double discrepancy = 0.0;  // sup-norm difference
};

/// Sample mean of single-q outputs over draws from the truncated law.
inline Eigen::VectorXd montecarlo_mean_output(const RhoParams& rho, int n, double tau,
                                              std::span<const double> u, int nsamples,
                                              std::uint64_t seed) {
    const auto draws = sample(rho, nsamples, seed);
    std::vector<Eigen::VectorXd> outputs(draws.size());
    parallel_for(static_cast<int>(draws.size()),
                 [&](int i) { outputs[i] = simulate_deterministic(draws[i], n, tau, u); });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u.size()) + 1);
    for (const auto& y : outputs) mean += y;
    return mean / static_cast<double>(draws.size());
}

inline Eigen::VectorXd population_output(const RhoParams& rho, const GridSpec& spec,
                                         std::span<const double> u,
                                         const AssemblyOptions& opts = {}) {
    return simulate(build_sampled(assemble(spec, rho, opts), spec.tau), u, false).y;
}

inline PopulationComparison population_vs_montecarlo(const RhoParams& rho, const GridSpec& spec,
                                                     std::span<const double> u, int nsamples,
                                                     std::uint64_t seed,
                                                     const AssemblyOptions& opts = {}) {
    PopulationComparison cmp;
    cmp.population = population_output(rho, spec, u, opts);
    cmp.mc_mean = montecarlo_mean_output(rho, spec.n, spec.tau, u, nsamples, seed);
    cmp.discrepancy = (cmp.population - cmp.mc_mean).cwiseAbs().maxCoeff();
    return cmp;
}

}  // namespace popdiff
