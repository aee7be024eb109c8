#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "popdiff/assembly.hpp"
#include "popdiff/density.hpp"
#include "popdiff/forward.hpp"
#include "popdiff/parallel.hpp"

namespace popdiff {

inline constexpr int kMinBandSamples = 100;

/// Pointwise order-statistic envelope of single-q output trajectories.
struct CredibleBand {
    double level = 0.75;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::VectorXd mean_output;  // population-model output
    int nsamples = 0;
    std::uint64_t seed = 0;

    double max_width() const { return (upper - lower).maxCoeff(); }
};

/// Index of the lower order statistic. With k = floor(n (1 - level) / 2) the
/// band [x_(k), x_(n-1-k)] holds at least level * n samples at every time and
/// widens monotonically with level. The slack absorbs rounding in 1 - level.
inline int band_lower_rank(int nsamples, double level) {
    return static_cast<int>(std::floor(nsamples * (1.0 - level) / 2.0 + 1e-9));
}

inline CredibleBand credible_band(const RhoParams& rho, const GridSpec& spec,
                                  std::span<const double> u, double level = 0.75,
                                  int nsamples = 1000, std::uint64_t seed = 1,
                                  const AssemblyOptions& opts = {}) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("band level must lie in (0, 1)");
    if (nsamples < kMinBandSamples) throw DomainError("band needs at least 100 samples");
    spec.validate();
    const auto draws = sample(rho, nsamples, seed);
    const int times = static_cast<int>(u.size()) + 1;
    Eigen::MatrixXd traj(times, nsamples);
    parallel_for(nsamples, [&](int i) {
        traj.col(i) = simulate_deterministic(draws[i], spec.n, spec.tau, u);
    });

    CredibleBand band;
    band.level = level;
    band.nsamples = nsamples;
    band.seed = seed;
    band.lower.resize(times);
    band.upper.resize(times);
    const int k = band_lower_rank(nsamples, level);
    std::vector<double> row(nsamples);
    for (int j = 0; j < times; ++j) {
        for (int i = 0; i < nsamples; ++i) row[i] = traj(j, i);
        std::sort(row.begin(), row.end());
        band.lower[j] = row[k];
        band.upper[j] = row[nsamples - 1 - k];
    }
    band.mean_output = population_output(rho, spec, u, opts);
    return band;
}

/// Fraction of time points where the population mean lies inside the band.
inline double mean_coverage(const CredibleBand& band) {
    const auto n = band.mean_output.size();
    int inside = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        if (band.mean_output[j] >= band.lower[j] && band.mean_output[j] <= band.upper[j]) ++inside;
    return n == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(n);
}

}  // namespace popdiff
