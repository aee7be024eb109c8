#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "popdiff/density.hpp"
#include "popdiff/forward.hpp"

namespace popdiff {

/// Randomized BrAC pulse trains: each pulse is h sin^2(pi (t - s) / w) on [s, s + w].
struct PulseSpec {
    int count_min = 1;
    int count_max = 2;
    double height_min = 0.5;
    double height_max = 1.0;
    double width_min = 1.0;   // hours
    double width_max = 3.0;   // hours
    double horizon = 10.0;    // hours; mu = round(horizon / tau)
    double latest_start_fraction = 0.5;  // pulses start in [0, fraction * horizon]
};

enum class SynthMode { episode, population };

inline std::vector<double> pulse_train(const PulseSpec& ps, double tau, std::mt19937_64& gen) {
    const int steps = static_cast<int>(std::lround(ps.horizon / tau));
    std::uniform_int_distribution<int> count(ps.count_min, ps.count_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Pulse {
        double start, width, height;
    };
    std::vector<Pulse> pulses(count(gen));
    for (auto& p : pulses) {
        p.height = ps.height_min + (ps.height_max - ps.height_min) * unit(gen);
        p.width = ps.width_min + (ps.width_max - ps.width_min) * unit(gen);
        p.start = ps.latest_start_fraction * ps.horizon * unit(gen);
    }
    std::vector<double> u(steps, 0.0);
    for (int j = 0; j < steps; ++j) {
        const double t = j * tau;
        for (const auto& p : pulses) {
            if (t > p.start && t < p.start + p.width) {
                const double s = std::sin(std::numbers::pi * (t - p.start) / p.width);
                u[j] += p.height * s * s;
            }
        }
    }
    return u;
}

struct SynthOptions {
    int n_episodes = 10;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    SynthMode mode = SynthMode::population;
    PulseSpec pulses{};
    AssemblyOptions assembly{};
};

/// Synthetic episodes. Population mode emits the population-model output plus
/// i.i.d. N(0, sigma^2) noise; episode mode draws one q per episode from the
/// rho0-law and emits that single-q output plus noise.
inline std::vector<Episode> generate_synthetic(const RhoParams& rho0, const GridSpec& spec,
                                               const SynthOptions& opts) {
    rho0.validate();
    spec.validate();
    if (opts.noise_sigma < 0.0) throw DomainError("noise sigma must be nonnegative");
    std::mt19937_64 gen(opts.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Episode> out;
    SampledSystem population;
    std::vector<QPoint> qs;
    if (opts.mode == SynthMode::population) {
        population = build_sampled(assemble(spec, rho0, opts.assembly), spec.tau);
    } else {
        qs = sample(rho0, opts.n_episodes, opts.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    for (int i = 0; i < opts.n_episodes; ++i) {
        Episode ep;
        char name[32];
        std::snprintf(name, sizeof(name), "synth_%03d", i);
        ep.id = name;
        ep.tau = spec.tau;
        ep.u = pulse_train(opts.pulses, spec.tau, gen);
        const Eigen::VectorXd y = opts.mode == SynthMode::population
                                      ? simulate(population, ep.u, false).y
                                      : simulate_deterministic(qs[i], spec.n, spec.tau, ep.u);
        ep.y_obs.resize(y.size());
        for (Eigen::Index j = 0; j < y.size(); ++j)
            ep.y_obs[j] = y[j] + opts.noise_sigma * noise(gen);
        out.push_back(std::move(ep));
    }
    return out;
}

}  // namespace popdiff
