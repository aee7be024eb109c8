#pragma once

// Reference computations for the test suite. Each oracle is built from
// different machinery than the library path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/popdiff.hpp"

namespace oracle {

/// Gauss–Legendre rule on [0, 1] by Golub–Welsch (eigenvalues of the Jacobi matrix).
struct Rule {
    std::vector<double> x, w;
};

inline Rule golub_welsch(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    Rule r;
    for (int i = 0; i < n; ++i) {
        const double v = es.eigenvectors()(0, i);
        r.x.push_back(0.5 * (es.eigenvalues()[i] + 1.0));
        r.w.push_back(v * v);  // weights on [-1,1] are 2 v^2; halved for [0,1]
    }
    return r;
}

/// Composite tensor Gauss rule over a rectangle with `panels` panels per axis.
inline double integrate2d(const std::function<double(double, double)>& f, double x0, double x1,
                          double y0, double y1, int panels = 16, int order = 20) {
    const Rule r = golub_welsch(order);
    const double hx = (x1 - x0) / panels, hy = (y1 - y0) / panels;
    double s = 0.0;
    for (int py = 0; py < panels; ++py)
        for (int px = 0; px < panels; ++px)
            for (int j = 0; j < order; ++j)
                for (int i = 0; i < order; ++i)
                    s += r.w[i] * r.w[j] * f(x0 + hx * (px + r.x[i]), y0 + hy * (py + r.x[j]));
    return s * hx * hy;
}

/// P(lo <= Z <= hi) for Z standard normal.
inline double normal_interval(double lo, double hi) {
    return 0.5 * (std::erfc(-hi / std::sqrt(2.0)) - std::erfc(-lo / std::sqrt(2.0)));
}

/// exp(A) by a truncated Taylor series after scaling, then repeated squaring.
inline Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::pow(2.0, squarings) > 0.25) ++squarings;
    const Eigen::MatrixXd s = a / std::pow(2.0, squarings);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * s / k;
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Random valid rho whose box stays within a few standard deviations of mu,
/// so the density is far from the gamma floor.
inline popdiff::RhoParams random_rho(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    popdiff::RhoParams r;
    r.mu1 = 0.6 + 0.8 * u(gen);
    r.mu2 = 0.6 + 0.8 * u(gen);
    r.l11 = 0.08 + 0.2 * u(gen);
    r.l22 = 0.08 + 0.2 * u(gen);
    r.l21 = -0.05 + 0.1 * u(gen);
    const double s2 = std::sqrt(r.l21 * r.l21 + r.l22 * r.l22);
    r.a1 = std::max(r.mu1 - (0.8 + 1.7 * u(gen)) * r.l11, 0.05);
    r.b1 = r.mu1 + (0.8 + 1.7 * u(gen)) * r.l11;
    r.a2 = std::max(r.mu2 - (0.8 + 1.7 * u(gen)) * s2, 0.0);
    r.b2 = r.mu2 + (0.8 + 1.7 * u(gen)) * s2;
    return r;
}

/// Smooth sin^2 pulse input of `steps` samples at interval tau.
inline std::vector<double> pulse(int steps, double tau, double start = 0.5, double width = 2.0,
                                 double height = 1.0) {
    std::vector<double> u(steps, 0.0);
    for (int j = 0; j < steps; ++j) {
        const double t = j * tau;
        if (t > start && t < start + width) {
            const double s = std::sin(M_PI * (t - start) / width);
            u[j] = height * s * s;
        }
    }
    return u;
}

/// Central-difference gradient of a scalar function of rho.
inline popdiff::RhoVector fd_gradient(const std::function<double(const popdiff::RhoParams&)>& f,
                                      const popdiff::RhoParams& rho, double step = 1e-6) {
    popdiff::RhoVector g{};
    const auto base = rho.to_array();
    for (int k = 0; k < popdiff::kRhoDim; ++k) {
        const double h = step * (1.0 + std::abs(base[k]));
        auto p = base, m = base;
        p[k] += h;
        m[k] -= h;
        g[k] = (f(popdiff::RhoParams::from_array(p)) - f(popdiff::RhoParams::from_array(m))) /
               (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
