#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/density.hpp"
#include "popdiff/errors.hpp"
#include "popdiff/forward.hpp"
#include "popdiff/objective.hpp"

namespace popdiff {

enum class FitStatus { converged, max_iterations, degenerate_density, line_search_failure };

inline const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iterations: return "max-iterations";
        case FitStatus::degenerate_density: return "degenerate-density";
        case FitStatus::line_search_failure: return "line-search-failure";
    }
    return "unknown";
}

struct OptimizerOptions {
    int max_iter = 200;
    double gtol = 1e-6;  // scaled by (1 + cost)
    double xtol = 1e-9;
    int max_backtracks = 40;
    double armijo = 1e-4;
    double first_step = 0.1;  // max-norm of the first trial step
};

struct TraceEntry {
    int iteration = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    double step_norm = 0.0;
};

/// Smooth objective over a box, optionally with a custom feasibility map.
struct BoundedProblem {
    std::function<double(const Eigen::VectorXd&)> cost;
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> cost_grad;
    Eigen::VectorXd lower, upper;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;  // defaults to clamping
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double cost = 0.0;
    Eigen::VectorXd grad;
    std::vector<TraceEntry> trace;
    FitStatus status = FitStatus::max_iterations;
    int n_cost_evals = 0;
    int n_grad_evals = 0;
};

/// Projected quasi-Newton descent: a Powell-damped BFGS model restricted to the
/// free variables, projected backtracking line search, and a strict-decrease
/// acceptance rule. DegenerateDensity at a trial point triggers backtracking.
inline MinimizeResult minimize_bounded(const BoundedProblem& prob, const Eigen::VectorXd& x0,
                                       const OptimizerOptions& opts = {}) {
    const Eigen::Index dim = x0.size();
    auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (prob.project) return prob.project(v);
        return v.cwiseMax(prob.lower).cwiseMin(prob.upper);
    };
    auto projected_gradient = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
        Eigen::VectorXd pg = g;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if ((x[i] <= prob.lower[i] && g[i] > 0.0) || (x[i] >= prob.upper[i] && g[i] < 0.0))
                pg[i] = 0.0;
        }
        return pg;
    };

    MinimizeResult res;
    res.x = project(x0);
    try {
        res.cost = prob.cost_grad(res.x, res.grad);
        ++res.n_cost_evals;
        ++res.n_grad_evals;
    } catch (const DegenerateDensity&) {
        res.status = FitStatus::degenerate_density;
        return res;
    }
    Eigen::VectorXd pg = projected_gradient(res.x, res.grad);
    res.trace.push_back({0, res.cost, pg.norm(), 0.0});

    Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(dim, dim);
    bool scaled = false;
    res.status = FitStatus::max_iterations;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        if (pg.norm() < opts.gtol * (1.0 + res.cost)) {
            res.status = FitStatus::converged;
            break;
        }
        // Newton-like step on the free variables only.
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < dim; ++i)
            if (pg[i] != 0.0 || (res.x[i] > prob.lower[i] && res.x[i] < prob.upper[i]))
                free.push_back(i);
        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            gf[a] = res.grad[free[a]];
            for (Eigen::Index b = 0; b < nf; ++b) hf(a, b) = hess(free[a], free[b]);
        }
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(dim);
        const Eigen::VectorXd df = hf.ldlt().solve(-gf);
        for (Eigen::Index a = 0; a < nf; ++a) dir[free[a]] = df[a];
        if (!dir.allFinite() || res.grad.dot(dir) >= 0.0) {
            hess.setIdentity();
            scaled = false;
            dir = -pg;
        }
        double alpha = scaled ? 1.0 : std::min(1.0, opts.first_step / dir.cwiseAbs().maxCoeff());

        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = 0.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= 0.5) {
            x_new = project(res.x + alpha * dir);
            const Eigen::VectorXd s = x_new - res.x;
            if (s.norm() == 0.0) break;
            try {
                f_new = prob.cost(x_new);
                ++res.n_cost_evals;
            } catch (const DegenerateDensity&) {
                continue;
            }
            if (f_new < res.cost && f_new <= res.cost + opts.armijo * res.grad.dot(s)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.status = FitStatus::line_search_failure;
            break;
        }

        Eigen::VectorXd g_new;
        f_new = prob.cost_grad(x_new, g_new);
        ++res.n_cost_evals;
        ++res.n_grad_evals;
        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - res.grad;
        const double sy = s.dot(y);
        if (!scaled && sy > 0.0) {
            hess = (y.squaredNorm() / sy) * Eigen::MatrixXd::Identity(dim, dim);
            scaled = true;
        }
        const Eigen::VectorXd bs = hess * s;
        const double sbs = s.dot(bs);
        if (sbs > 0.0) {
            // Powell damping keeps the update positive definite.
            const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
            const Eigen::VectorXd r = theta * y + (1.0 - theta) * bs;
            const double sr = s.dot(r);
            if (sr > 0.0) hess += r * r.transpose() / sr - bs * bs.transpose() / sbs;
        }
        res.x = x_new;
        res.cost = f_new;
        res.grad = g_new;
        pg = projected_gradient(res.x, res.grad);
        res.trace.push_back({iter, res.cost, pg.norm(), s.norm()});
        if (s.norm() < opts.xtol) {
            res.status = FitStatus::converged;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Population fit over rho in smooth unconstrained-ish coordinates:
//   x = (a1, log(b1 - a1), a2, log(b2 - a2), mu1, mu2,
//        softplus^{-1}(l11 - l_floor), l21, softplus^{-1}(l22 - l_floor))
// with simple lower bounds on a1 and a2.

namespace reparam {

inline double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }
inline double softplus_inv(double v) { return v > 30.0 ? v : std::log(std::expm1(v)); }
inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline Eigen::VectorXd to_x(const RhoParams& r) {
    Eigen::VectorXd x(kRhoDim);
    x << r.a1, std::log(r.b1 - r.a1), r.a2, std::log(r.b2 - r.a2), r.mu1, r.mu2,
        softplus_inv(std::max(r.l11 - kLFloor, 1e-300)), r.l21,
        softplus_inv(std::max(r.l22 - kLFloor, 1e-300));
    return x;
}

inline RhoParams to_rho(const Eigen::VectorXd& x) {
    RhoParams r;
    r.a1 = x[0];
    r.b1 = x[0] + std::exp(x[1]);
    r.a2 = x[2];
    r.b2 = x[2] + std::exp(x[3]);
    r.mu1 = x[4];
    r.mu2 = x[5];
    r.l11 = kLFloor + softplus(x[6]);
    r.l21 = x[7];
    r.l22 = kLFloor + softplus(x[8]);
    return r;
}

/// d J / d x from d J / d rho.
inline Eigen::VectorXd chain(const Eigen::VectorXd& x, const std::vector<double>& g) {
    Eigen::VectorXd gx(kRhoDim);
    gx[0] = g[kA1] + g[kB1];
    gx[1] = g[kB1] * std::exp(x[1]);
    gx[2] = g[kA2] + g[kB2];
    gx[3] = g[kB2] * std::exp(x[3]);
    gx[4] = g[kMu1];
    gx[5] = g[kMu2];
    gx[6] = g[kL11] * sigmoid(x[6]);
    gx[7] = g[kL21];
    gx[8] = g[kL22] * sigmoid(x[8]);
    return gx;
}

}  // namespace reparam

/// Global bounding box [lo, hi]^2 for the support rectangle.
struct SupportBounds {
    double lo = 0.0;
    double hi = 100.0;
};

struct FitOptions {
    OptimizerOptions optimizer;
    ObjectiveOptions objective;
    SupportBounds bounds;
};

struct FitResult {
    RhoParams rho_hat;
    double cost = 0.0;
    std::vector<TraceEntry> trace;
    FitStatus status = FitStatus::max_iterations;
    int n_cost_evals = 0;
    int n_grad_evals = 0;
};

inline FitResult fit(const std::vector<Episode>& episodes, const GridSpec& spec,
                     const RhoParams& init, const FitOptions& options = {}) {
    init.validate();
    check_episodes(spec, episodes);
    const double lo1 = std::max(kQ1Floor, options.bounds.lo);
    const double lo2 = std::max(0.0, options.bounds.lo);
    const double hi = options.bounds.hi;
    constexpr double inf = std::numeric_limits<double>::infinity();

    BoundedProblem prob;
    prob.lower = Eigen::VectorXd::Constant(kRhoDim, -inf);
    prob.upper = Eigen::VectorXd::Constant(kRhoDim, inf);
    prob.lower[0] = lo1;
    prob.lower[2] = lo2;
    prob.upper[0] = hi;
    prob.upper[2] = hi;
    prob.project = [=](const Eigen::VectorXd& v) {
        Eigen::VectorXd x = v;
        x[0] = std::clamp(x[0], lo1, hi);
        x[2] = std::clamp(x[2], lo2, hi);
        // keep b inside the global box
        x[1] = std::min(x[1], std::log(std::max(hi - x[0], 1e-12)));
        x[3] = std::min(x[3], std::log(std::max(hi - x[2], 1e-12)));
        return x;
    };
    prob.cost = [&](const Eigen::VectorXd& x) {
        return cost(reparam::to_rho(x), spec, episodes, options.objective);
    };
    prob.cost_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const CostReport rep = gradient_adjoint(reparam::to_rho(x), spec, episodes, options.objective);
        g = reparam::chain(x, rep.grad);
        return rep.cost;
    };

    const MinimizeResult mr = minimize_bounded(prob, reparam::to_x(init), options.optimizer);
    FitResult out;
    out.rho_hat = reparam::to_rho(mr.x);
    out.cost = mr.cost;
    out.trace = mr.trace;
    out.status = mr.status;
    out.n_cost_evals = mr.n_cost_evals;
    out.n_grad_evals = mr.n_grad_evals;
    return out;
}

struct DeterministicFit {
    QPoint q;
    double cost = 0.0;
    FitStatus status = FitStatus::max_iterations;
};

/// Least-squares fit of a single (q1, q2) to one episode (q1 >= floor, q2 >= 0).
inline DeterministicFit fit_deterministic(const Episode& episode, const GridSpec& spec,
                                          const QPoint& init, const OptimizerOptions& opts = {}) {
    if (!(init.q1 > kQ1Floor)) throw InvalidParameter("initial q1 must exceed the floor");
    check_episodes(spec, {episode});
    const std::vector<Episode> eps{episode};
    constexpr double inf = std::numeric_limits<double>::infinity();
    BoundedProblem prob;
    prob.lower = Eigen::Vector2d(kQ1Floor, 0.0);
    prob.upper = Eigen::Vector2d(inf, inf);
    prob.cost = [&](const Eigen::VectorXd& x) {
        return system_cost(deterministic_system({x[0], x[1]}, spec.n, spec.tau), eps);
    };
    prob.cost_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const CellMoments m = point_moments({x[0], x[1]});
        const AssembledOperators ops = operators_from_moments(spec.n, m);
        SampledSystem sys = build_sampled(ops, spec.tau);
        build_sensitivities(ops, gradients_from_moments(spec.n, m), sys);
        const CostReport rep = adjoint_cost_gradient(sys, eps);
        g = Eigen::Map<const Eigen::VectorXd>(rep.grad.data(), 2);
        return rep.cost;
    };
    const MinimizeResult mr = minimize_bounded(prob, Eigen::Vector2d(init.q1, init.q2), opts);
    return {{mr.x[0], mr.x[1]}, mr.cost, mr.status};
}

struct InitOptions {
    QPoint start{1.0, 1.0};
    RhoParams fallback{};         // used when a per-episode fit fails
    double margin_fraction = 0.1;  // of the spread of fitted values
    double min_margin_fraction = 0.1;  // of |mean|, for tightly clustered fits
    OptimizerOptions optimizer{};
};

struct Initialization {
    RhoParams rho;
    std::vector<QPoint> per_episode;
    std::vector<std::string> warnings;
};

/// Moment-based starting point: fit each episode deterministically, centre
/// the normal at the mean of the fitted q, box the fitted values, and take
/// independent components with standard deviation (b - a) / 6.
inline Initialization initialize(const std::vector<Episode>& episodes, const GridSpec& spec,
                                 const InitOptions& opts = {}) {
    if (episodes.size() < 2) throw DomainError("initialization needs at least two episodes");
    Initialization out;
    for (const auto& ep : episodes) {
        try {
            const DeterministicFit df = fit_deterministic(ep, spec, opts.start, opts.optimizer);
            if (!std::isfinite(df.q.q1) || !std::isfinite(df.q.q2) || !std::isfinite(df.cost))
                throw SimulationDivergence("non-finite deterministic fit");
            out.per_episode.push_back(df.q);
        } catch (const Error& e) {
            out.warnings.push_back("episode " + ep.id + ": deterministic fit failed (" + e.what() +
                                   "); using fallback box");
            out.rho = opts.fallback;
            out.per_episode.clear();
            return out;
        }
    }
    const auto count = static_cast<double>(out.per_episode.size());
    double mean[2] = {0.0, 0.0}, lo[2], hi[2];
    lo[0] = lo[1] = std::numeric_limits<double>::infinity();
    hi[0] = hi[1] = -std::numeric_limits<double>::infinity();
    for (const auto& q : out.per_episode) {
        const double v[2] = {q.q1, q.q2};
        for (int i = 0; i < 2; ++i) {
            mean[i] += v[i] / count;
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
    }
    double a[2], b[2];
    const double floor[2] = {kQ1Floor, 0.0};
    for (int i = 0; i < 2; ++i) {
        const double margin = std::max(opts.margin_fraction * (hi[i] - lo[i]),
                                       opts.min_margin_fraction * std::abs(mean[i]));
        a[i] = std::max(lo[i] - margin, floor[i]);
        b[i] = hi[i] + std::max(margin, 1e-6);
    }
    out.rho = {a[0], b[0], a[1], b[1], mean[0], mean[1],
               std::max((b[0] - a[0]) / 6.0, kLFloor), 0.0, std::max((b[1] - a[1]) / 6.0, kLFloor)};
    return out;
}

}  // namespace popdiff
