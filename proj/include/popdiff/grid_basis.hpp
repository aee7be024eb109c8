#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "popdiff/errors.hpp"

namespace popdiff {

/// Smallest admissible lower support bound for the diffusivity q1.
inline constexpr double kQ1Floor = 1e-6;

/// Discretization triple (n, m1, m2) plus the sampling interval tau (hours).
struct GridSpec {
    int n = 8;
    int m1 = 4;
    int m2 = 4;
    double tau = 1.0 / 12.0;

    int block_size() const { return n + 1; }
    int cell_count() const { return m1 * m2; }
    int dimension() const { return (n + 1) * m1 * m2; }

    void validate() const {
        if (n < 1 || m1 < 1 || m2 < 1)
            throw DomainError("grid spec requires n, m1, m2 >= 1");
        if (!(tau > 0.0)) throw DomainError("grid spec requires tau > 0");
    }
};

/// Support rectangle [a1,b1] x [a2,b2] of the parameter density.
struct QBox {
    double a1 = 0.0, b1 = 1.0, a2 = 0.0, b2 = 1.0;

    double lower(int axis) const { return axis == 1 ? a1 : a2; }
    double upper(int axis) const { return axis == 1 ? b1 : b2; }
    double area() const { return (b1 - a1) * (b2 - a2); }
    bool contains(double q1, double q2) const {
        return q1 >= a1 && q1 <= b1 && q2 >= a2 && q2 <= b2;
    }
};

/// Tensor multi-index L = (j, j1, j2); j in [0, n], j1 in [1, m1], j2 in [1, m2].
struct MultiIndex {
    int j = 0;
    int j1 = 1;
    int j2 = 1;

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Linear B-spline ("hat") j on the uniform mesh {k/n} of [0, 1].
inline double hat_eval(int j, int n, double eta) {
    if (n < 1 || j < 0 || j > n) throw DomainError("hat index out of range");
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta outside [0, 1]");
    const double s = eta * n - j;
    if (s <= -1.0 || s >= 1.0) return 0.0;
    return 1.0 - (s < 0.0 ? -s : s);
}

/// Uniform cell j_i (1-based) of axis i over [a_i, b_i] split into m_i cells.
inline std::pair<double, double> qcell_bounds(int axis, int j_i, const QBox& box, int m_i) {
    if (axis != 1 && axis != 2) throw DomainError("axis must be 1 or 2");
    if (m_i < 1 || j_i < 1 || j_i > m_i) throw DomainError("q-cell index out of range");
    const double a = box.lower(axis);
    const double b = box.upper(axis);
    const double lo = j_i == 1 ? a : a + (b - a) * (j_i - 1) / m_i;
    const double hi = j_i == m_i ? b : a + (b - a) * j_i / m_i;
    return {lo, hi};
}

// The flat index is eta-fastest so that each q-cell owns a contiguous block of
// n + 1 coefficients.
inline int flat_index(const MultiIndex& mi, const GridSpec& spec) {
    if (mi.j < 0 || mi.j > spec.n || mi.j1 < 1 || mi.j1 > spec.m1 || mi.j2 < 1 ||
        mi.j2 > spec.m2)
        throw DomainError("multi-index component out of range");
    return mi.j + (spec.n + 1) * ((mi.j1 - 1) + spec.m1 * (mi.j2 - 1));
}

inline MultiIndex multi_index(int flat, const GridSpec& spec) {
    if (flat < 0 || flat >= spec.dimension()) throw DomainError("flat index out of range");
    const int np1 = spec.n + 1;
    MultiIndex mi;
    mi.j = flat % np1;
    const int cell = flat / np1;
    mi.j1 = cell % spec.m1 + 1;
    mi.j2 = cell / spec.m1 + 1;
    return mi;
}

/// Zero-based cell number of (j1, j2), matching the block order of flat_index.
inline int cell_index(int j1, int j2, const GridSpec& spec) {
    return (j1 - 1) + spec.m1 * (j2 - 1);
}

/// Gram matrix of the hats on [0, 1].
inline Eigen::MatrixXd hat_mass(int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double h = 1.0 / n;
    for (int i = 0; i <= n; ++i) {
        m(i, i) = (i == 0 || i == n) ? h / 3.0 : 2.0 * h / 3.0;
        if (i < n) m(i, i + 1) = m(i + 1, i) = h / 6.0;
    }
    return m;
}

/// [int phi_i' phi_j'] for the hats on [0, 1].
inline Eigen::MatrixXd hat_stiffness(int n) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double inv_h = static_cast<double>(n);
    for (int i = 0; i <= n; ++i) {
        k(i, i) = (i == 0 || i == n) ? inv_h : 2.0 * inv_h;
        if (i < n) k(i, i + 1) = k(i + 1, i) = -inv_h;
    }
    return k;
}

}  // namespace popdiff
