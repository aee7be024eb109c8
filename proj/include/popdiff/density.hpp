#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/errors.hpp"
#include "popdiff/grid_basis.hpp"
#include "popdiff/quadrature.hpp"

namespace popdiff {

/// Lower bound on the diagonal of the Cholesky factor L.
inline constexpr double kLFloor = 1e-4;
/// Normalizations below this mean the Gaussian mass has left the box.
inline constexpr double kNormalizationFloor = 1e-12;
inline constexpr int kDefaultNormalizationOrder = 24;
/// Equal panels per axis for the normalization rule.
inline constexpr int kNormalizationPanels = 4;

inline constexpr int kRhoDim = 9;

enum RhoIndex : int { kA1 = 0, kB1, kA2, kB2, kMu1, kMu2, kL11, kL21, kL22 };

inline constexpr std::array<const char*, kRhoDim> kRhoNames = {
    "a1", "b1", "a2", "b2", "mu1", "mu2", "l11", "l21", "l22"};

using RhoVector = std::array<double, kRhoDim>;

/// Truncated bivariate normal parameters rho = (a1, b1, a2, b2, mu1, mu2, l11, l21, l22)
/// with Sigma = L L^T.
struct RhoParams {
    double a1 = 0.5, b1 = 1.5, a2 = 0.5, b2 = 1.5;
    double mu1 = 1.0, mu2 = 1.0;
    double l11 = 0.2, l21 = 0.0, l22 = 0.2;

    RhoVector to_array() const { return {a1, b1, a2, b2, mu1, mu2, l11, l21, l22}; }

    static RhoParams from_array(const RhoVector& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
    }

    QBox box() const { return {a1, b1, a2, b2}; }

    /// Non-throwing feasibility check; returns an empty string when valid.
    std::string violation() const {
        for (double v : to_array())
            if (!std::isfinite(v)) return "non-finite component";
        if (!(a1 >= kQ1Floor)) return "a1 below the diffusivity floor";
        if (!(a2 >= 0.0)) return "a2 negative";
        if (!(a1 < b1)) return "a1 >= b1";
        if (!(a2 < b2)) return "a2 >= b2";
        if (!(l11 >= kLFloor) || !(l22 >= kLFloor)) return "Cholesky diagonal below floor";
        return {};
    }

    bool valid() const { return violation().empty(); }

    void validate() const {
        if (auto v = violation(); !v.empty()) throw InvalidParameter("rho: " + v);
    }
};

struct QPoint {
    double q1 = 1.0;
    double q2 = 1.0;
};

inline Eigen::Matrix2d sigma_from_l(const RhoParams& rho) {
    if (!(rho.l11 >= kLFloor) || !(rho.l22 >= kLFloor))
        throw InvalidParameter("Cholesky diagonal below floor");
    Eigen::Matrix2d s;
    s(0, 0) = rho.l11 * rho.l11;
    s(0, 1) = s(1, 0) = rho.l11 * rho.l21;
    s(1, 1) = rho.l21 * rho.l21 + rho.l22 * rho.l22;
    return s;
}

/// Untruncated Gaussian phi(q; mu, L L^T) and its derivatives with respect to
/// q and the shape parameters (mu1, mu2, l11, l21, l22).
struct GaussianEval {
    double value = 0.0;
    double dq1 = 0.0, dq2 = 0.0;
    std::array<double, 5> dshape{};  // d/d(mu1, mu2, l11, l21, l22)
};

inline GaussianEval gaussian_eval(double q1, double q2, const RhoParams& rho, bool with_grad = true) {
    GaussianEval g;
    const double d1 = q1 - rho.mu1;
    const double d2 = q2 - rho.mu2;
    const double z1 = d1 / rho.l11;
    const double z2 = (d2 - rho.l21 * z1) / rho.l22;
    g.value = std::exp(-0.5 * (z1 * z1 + z2 * z2)) /
              (2.0 * std::numbers::pi * rho.l11 * rho.l22);
    if (!with_grad) return g;
    // Derivatives of log phi, then scaled by phi.
    const double dlog_d1 = -z1 / rho.l11 + z2 * rho.l21 / (rho.l11 * rho.l22);
    const double dlog_d2 = -z2 / rho.l22;
    const double dlog_l11 =
        z1 * z1 / rho.l11 - z2 * rho.l21 * z1 / (rho.l11 * rho.l22) - 1.0 / rho.l11;
    const double dlog_l21 = z1 * z2 / rho.l22;
    const double dlog_l22 = (z2 * z2 - 1.0) / rho.l22;
    g.dq1 = g.value * dlog_d1;
    g.dq2 = g.value * dlog_d2;
    g.dshape = {-g.dq1, -g.dq2, g.value * dlog_l11, g.value * dlog_l21, g.value * dlog_l22};
    return g;
}

/// Integrals of (1, q1, q2) * phi over a sub-rectangle of the support box and
/// their derivatives in rho. The sub-rectangle is given in box-relative
/// coordinates t in [0,1]^2, so its corners move affinely with (a, b) and the
/// moving-limit (Leibniz) terms enter through the chain rule at each node.
struct RectMoments {
    std::array<double, 3> value{};
    std::array<RhoVector, 3> grad{};
    double min_phi = 0.0;  // smallest phi at any quadrature node
};

inline RectMoments integrate_rect(const RhoParams& rho, double t1_lo, double t1_hi, double t2_lo,
                                  double t2_hi, const QuadratureRule& rule, bool with_grad) {
    RectMoments out;
    out.min_phi = std::numeric_limits<double>::infinity();
    const double w1 = rho.b1 - rho.a1;
    const double w2 = rho.b2 - rho.a2;
    const double dt1 = t1_hi - t1_lo;
    const double dt2 = t2_hi - t2_lo;
    const double jac = w1 * w2 * dt1 * dt2;
    const int order = static_cast<int>(rule.nodes.size());
    for (int i2 = 0; i2 < order; ++i2) {
        const double t2 = t2_lo + dt2 * rule.nodes[i2];
        const double q2 = rho.a2 + w2 * t2;
        for (int i1 = 0; i1 < order; ++i1) {
            const double t1 = t1_lo + dt1 * rule.nodes[i1];
            const double q1 = rho.a1 + w1 * t1;
            const double wq = rule.weights[i1] * rule.weights[i2] * jac;
            const GaussianEval g = gaussian_eval(q1, q2, rho, with_grad);
            out.min_phi = std::min(out.min_phi, g.value);
            const std::array<double, 3> h = {1.0, q1, q2};
            for (int k = 0; k < 3; ++k) out.value[k] += wq * h[k] * g.value;
            if (!with_grad) continue;
            // d(h phi)/dq for each moment weight h.
            const std::array<double, 3> dhq1 = {g.dq1, g.value + q1 * g.dq1, q2 * g.dq1};
            const std::array<double, 3> dhq2 = {g.dq2, q1 * g.dq2, g.value + q2 * g.dq2};
            for (int k = 0; k < 3; ++k) {
                const double hv = h[k] * g.value;
                auto& gr = out.grad[k];
                // q1 = a1 + (b1 - a1) t1; jac carries a factor (b1 - a1).
                gr[kA1] += wq * (dhq1[k] * (1.0 - t1) - hv / w1);
                gr[kB1] += wq * (dhq1[k] * t1 + hv / w1);
                gr[kA2] += wq * (dhq2[k] * (1.0 - t2) - hv / w2);
                gr[kB2] += wq * (dhq2[k] * t2 + hv / w2);
                for (int s = 0; s < 5; ++s) gr[kMu1 + s] += wq * h[k] * g.dshape[s];
            }
        }
    }
    return out;
}

namespace detail {
inline double normalization_checked(double z) {
    if (!(z >= kNormalizationFloor)) {
        std::ostringstream os;
        os << "density normalization " << z << " below floor " << kNormalizationFloor
           << " (Gaussian mass has escaped the support box)";
        throw DegenerateDensity(os.str());
    }
    return z;
}
}  // namespace detail

/// Gaussian mass inside the box (and its rho-gradient) by composite tensor
/// Gauss–Legendre: kNormalizationPanels panels per axis, `quad_order` nodes each.
inline RectMoments box_mass(const RhoParams& rho, int quad_order, bool with_grad) {
    const auto& rule = gauss_legendre(quad_order);
    RectMoments total;
    total.min_phi = std::numeric_limits<double>::infinity();
    constexpr int p = kNormalizationPanels;
    for (int i2 = 0; i2 < p; ++i2) {
        for (int i1 = 0; i1 < p; ++i1) {
            const auto m = integrate_rect(rho, double(i1) / p, double(i1 + 1) / p, double(i2) / p,
                                          double(i2 + 1) / p, rule, with_grad);
            for (int k = 0; k < 3; ++k) {
                total.value[k] += m.value[k];
                for (int r = 0; r < kRhoDim; ++r) total.grad[k][r] += m.grad[k][r];
            }
            total.min_phi = std::min(total.min_phi, m.min_phi);
        }
    }
    return total;
}

inline double normalization(const RhoParams& rho, int quad_order = kDefaultNormalizationOrder) {
    rho.validate();
    return detail::normalization_checked(box_mass(rho, quad_order, false).value[0]);
}

inline double eval_density(const QPoint& q, const RhoParams& rho,
                           int quad_order = kDefaultNormalizationOrder) {
    const double z = normalization(rho, quad_order);
    if (!rho.box().contains(q.q1, q.q2)) return 0.0;
    return gaussian_eval(q.q1, q.q2, rho, false).value / z;
}

/// d f / d rho at a point strictly inside the box. The (a, b) components are
/// the derivative of the normalization only; the moving indicator is handled
/// by the assembly integrals.
inline RhoVector density_grad_rho(const QPoint& q, const RhoParams& rho,
                                  int quad_order = kDefaultNormalizationOrder) {
    rho.validate();
    const auto norm = box_mass(rho, quad_order, true);
    const double z = detail::normalization_checked(norm.value[0]);
    RhoVector grad{};
    if (!rho.box().contains(q.q1, q.q2)) return grad;
    const GaussianEval g = gaussian_eval(q.q1, q.q2, rho, true);
    const double f = g.value / z;
    for (int k = 0; k < kRhoDim; ++k) {
        const double dphi = k >= kMu1 ? g.dshape[k - kMu1] : 0.0;
        grad[k] = dphi / z - f * norm.grad[0][k] / z;
    }
    return grad;
}

/// Rejection sampler for the truncated law; owns its generator state.
class TruncatedNormalSampler {
public:
    static constexpr int kProbeBatch = 20000;
    static constexpr double kMinAcceptance = 1e-4;

    TruncatedNormalSampler(const RhoParams& rho, std::uint64_t seed) : rho_(rho), gen_(seed) {
        rho_.validate();
        int accepted = 0;
        for (int i = 0; i < kProbeBatch; ++i) {
            const QPoint q = propose();
            if (rho_.box().contains(q.q1, q.q2)) {
                ++accepted;
                pending_.push_back(q);
            }
        }
        const double rate = static_cast<double>(accepted) / kProbeBatch;
        if (rate < kMinAcceptance) {
            std::ostringstream os;
            os << "rejection sampler acceptance rate " << rate << " over " << kProbeBatch
               << " proposals is below " << kMinAcceptance;
            throw DegenerateDensity(os.str());
        }
    }

    QPoint next() {
        if (next_pending_ < pending_.size()) return pending_[next_pending_++];
        for (;;) {
            const QPoint q = propose();
            if (rho_.box().contains(q.q1, q.q2)) return q;
        }
    }

    std::vector<QPoint> draw(int count) {
        if (count < 1) throw DomainError("sample count must be >= 1");
        std::vector<QPoint> out;
        out.reserve(count);
        for (int i = 0; i < count; ++i) out.push_back(next());
        return out;
    }

private:
    QPoint propose() {
        const double z1 = normal_(gen_);
        const double z2 = normal_(gen_);
        return {rho_.mu1 + rho_.l11 * z1, rho_.mu2 + rho_.l21 * z1 + rho_.l22 * z2};
    }

    RhoParams rho_;
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<QPoint> pending_;
    std::size_t next_pending_ = 0;
};

inline std::vector<QPoint> sample(const RhoParams& rho, int count, std::uint64_t seed) {
    TruncatedNormalSampler sampler(rho, seed);
    return sampler.draw(count);
}

}  // namespace popdiff
