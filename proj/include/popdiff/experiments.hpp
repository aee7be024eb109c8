#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "popdiff/io.hpp"
#include "popdiff/optimizer.hpp"
#include "popdiff/parallel.hpp"
#include "popdiff/synthetic.hpp"

namespace popdiff {

/// Distance used for trend errors.
///   mu:   Euclidean distance between (mu1, mu2)
///   rho:  Euclidean distance over all nine components
///   mean: Euclidean distance between the means of the truncated laws
enum class TrendNorm { mu, rho, mean };

inline const char* to_string(TrendNorm n) {
    switch (n) {
        case TrendNorm::mu: return "mu";
        case TrendNorm::rho: return "rho";
        case TrendNorm::mean: return "mean";
    }
    return "unknown";
}

/// Mean of the truncated law by the normalization rule.
inline QPoint truncated_mean(const RhoParams& rho, int quad_order = kDefaultNormalizationOrder) {
    rho.validate();
    const RectMoments m = box_mass(rho, quad_order, false);
    const double z = detail::normalization_checked(m.value[0]);
    return {m.value[1] / z, m.value[2] / z};
}

inline double trend_distance(const RhoParams& x, const RhoParams& y, TrendNorm norm) {
    switch (norm) {
        case TrendNorm::mu: return std::hypot(x.mu1 - y.mu1, x.mu2 - y.mu2);
        case TrendNorm::rho: {
            const auto a = x.to_array(), b = y.to_array();
            double s = 0.0;
            for (int k = 0; k < kRhoDim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
            return std::sqrt(s);
        }
        case TrendNorm::mean: {
            const QPoint p = truncated_mean(x), q = truncated_mean(y);
            return std::hypot(p.q1 - q.q1, p.q2 - q.q2);
        }
    }
    return 0.0;
}

/// One (level, seed) fit.
struct TrendCell {
    int level = 0;
    int seed_index = 0;
    std::uint64_t data_seed = 0;
    RhoParams init;
    RhoParams rho_hat;
    double cost = 0.0;
    FitStatus status = FitStatus::max_iterations;
    double error = 0.0;
    bool excluded = false;  // failed fit, left out of the median
    std::string note;
};

struct TrendReport {
    std::string axis;  // "nu" or "N"
    std::vector<int> levels;
    std::vector<double> errors;  // median over included cells at each level
    bool monotone = false;       // errors nonincreasing
    TrendNorm norm = TrendNorm::mu;
    std::vector<TrendCell> cells;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline bool nonincreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] <= v[i - 1])) return false;
    return true;
}

/// Excluded cells are failed fits. Max-iteration and line-search stops keep
/// their last iterate and are counted.
inline bool fit_failed(FitStatus s) { return s == FitStatus::degenerate_density; }

struct ConsistencyOptions {
    std::vector<int> nu_levels{2, 8, 32};
    int seeds = 5;
    double noise_sigma = 0.01;
    std::uint64_t base_seed = 1;
    double horizon = 10.0;  // T = mu tau, hours
    PulseSpec pulses{};
    FitOptions fit{};
    TrendNorm norm = TrendNorm::mu;
};

/// Seed of cell (level, s): splitmix64 of the base seed and the cell key.
inline std::uint64_t cell_seed(std::uint64_t base, int level_index, int seed_index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (1 + level_index * 1000003ULL + seed_index);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Population-mode data with nu episodes; level i uses tau / 2^i so that the
/// horizon mu tau = T stays fixed while mu grows. Fits start from the
/// moment-based initialization.
inline TrendReport consistency_trend(const RhoParams& rho0, const GridSpec& spec,
                                     const ConsistencyOptions& opts) {
    rho0.validate();
    spec.validate();
    const auto& levels = opts.nu_levels;
    if (levels.size() < 3) throw DomainError("consistency trend needs at least 3 levels");
    if (opts.seeds < 5) throw DomainError("consistency trend needs at least 5 seeds");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) throw DomainError("levels must be strictly increasing");
    if (levels.front() < 2) throw DomainError("moment-based initialization needs nu >= 2");

    TrendReport rep;
    rep.axis = "nu";
    rep.levels = levels;
    rep.norm = opts.norm;
    const int nl = static_cast<int>(levels.size());
    rep.cells.resize(static_cast<std::size_t>(nl) * opts.seeds);
    parallel_for(static_cast<int>(rep.cells.size()), [&](int c) {
        const int li = c / opts.seeds;
        const int si = c % opts.seeds;
        TrendCell& cell = rep.cells[c];
        cell.level = levels[li];
        cell.seed_index = si;
        cell.data_seed = cell_seed(opts.base_seed, li, si);
        GridSpec lspec = spec;
        lspec.tau = spec.tau / static_cast<double>(1 << li);
        SynthOptions so;
        so.n_episodes = levels[li];
        so.noise_sigma = opts.noise_sigma;
        so.seed = cell.data_seed;
        so.pulses = opts.pulses;
        so.pulses.horizon = opts.horizon;
        so.assembly = opts.fit.objective.assembly;
        try {
            const auto eps = generate_synthetic(rho0, lspec, so);
            cell.init = initialize(eps, lspec).rho;
            const FitResult fr = fit(eps, lspec, cell.init, opts.fit);
            cell.rho_hat = fr.rho_hat;
            cell.cost = fr.cost;
            cell.status = fr.status;
            cell.excluded = fit_failed(fr.status);
            if (cell.excluded) cell.note = to_string(fr.status);
            else cell.error = trend_distance(fr.rho_hat, rho0, opts.norm);
        } catch (const Error& e) {
            cell.excluded = true;
            cell.status = FitStatus::degenerate_density;
            cell.note = e.what();
        }
    });
    for (int li = 0; li < nl; ++li) {
        std::vector<double> errs;
        for (int si = 0; si < opts.seeds; ++si) {
            const auto& cell = rep.cells[static_cast<std::size_t>(li) * opts.seeds + si];
            if (!cell.excluded) errs.push_back(cell.error);
        }
        rep.errors.push_back(median(errs));
    }
    rep.monotone = nonincreasing(rep.errors);
    return rep;
}

struct RefinementOptions {
    GridSpec data_spec{32, 16, 16, 1.0 / 12.0};  // finer grid that generates the data
    int n_episodes = 10;
    std::uint64_t seed = 1;
    PulseSpec pulses{};
    FitOptions fit{};
    TrendNorm norm = TrendNorm::mu;
    std::optional<RhoParams> init;  // moment-based when empty
};

/// Refinement levels are indexed by the cell count m1 * m2 (the "level"
/// field); errors are distances to the fit at the finest spec.
inline TrendReport refinement_trend(const RhoParams& rho0, const std::vector<GridSpec>& specs,
                                    const RefinementOptions& opts) {
    rho0.validate();
    if (specs.size() < 3) throw DomainError("refinement trend needs at least 3 specs");
    for (std::size_t i = 1; i < specs.size(); ++i) {
        const auto& a = specs[i - 1];
        const auto& b = specs[i];
        if (b.n % a.n || b.m1 % a.m1 || b.m2 % a.m2 || b.dimension() <= a.dimension())
            throw DomainError("refinement specs must be nested and strictly finer");
        if (std::abs(a.tau - b.tau) > 1e-15) throw DomainError("refinement specs must share tau");
    }
    SynthOptions so;
    so.n_episodes = opts.n_episodes;
    so.noise_sigma = 0.0;
    so.seed = opts.seed;
    so.pulses = opts.pulses;
    so.assembly = opts.fit.objective.assembly;
    GridSpec dspec = opts.data_spec;
    dspec.tau = specs.front().tau;
    const auto eps = generate_synthetic(rho0, dspec, so);

    TrendReport rep;
    rep.axis = "N";
    rep.norm = opts.norm;
    rep.cells.resize(specs.size());
    parallel_for(static_cast<int>(specs.size()), [&](int i) {
        TrendCell& cell = rep.cells[i];
        cell.level = specs[i].m1 * specs[i].m2;
        cell.data_seed = opts.seed;
        try {
            cell.init = opts.init ? *opts.init : initialize(eps, specs[i]).rho;
            const FitResult fr = fit(eps, specs[i], cell.init, opts.fit);
            cell.rho_hat = fr.rho_hat;
            cell.cost = fr.cost;
            cell.status = fr.status;
            cell.excluded = fit_failed(fr.status);
            if (cell.excluded) cell.note = to_string(fr.status);
        } catch (const Error& e) {
            cell.excluded = true;
            cell.status = FitStatus::degenerate_density;
            cell.note = e.what();
        }
    });
    const TrendCell& finest = rep.cells.back();
    for (auto& cell : rep.cells) {
        rep.levels.push_back(cell.level);
        if (cell.excluded || finest.excluded) {
            rep.errors.push_back(std::nan(""));
            continue;
        }
        cell.error = trend_distance(cell.rho_hat, finest.rho_hat, opts.norm);
        rep.errors.push_back(cell.error);
    }
    // The finest level is the reference, so the trend is judged on the rest.
    std::vector<double> head(rep.errors.begin(), rep.errors.end() - 1);
    rep.monotone = nonincreasing(head) && !std::isnan(head.front());
    return rep;
}

// -------------------------------------------------------------- reporting

inline nlohmann::json trend_json(const TrendReport& rep, const RhoParams& rho0,
                                 const nlohmann::json& provenance) {
    using nlohmann::json;
    json j;
    j["note"] = "numerical evidence only; no theorem is verified by this report";
    j["axis"] = rep.axis;
    j["norm"] = to_string(rep.norm);
    j["levels"] = rep.levels;
    json errs = json::array();
    for (double e : rep.errors) errs.push_back(std::isnan(e) ? json(nullptr) : json(e));
    j["errors"] = errs;
    j["monotone"] = rep.monotone;
    j["rho0"] = io::rho_to_json(rho0);
    j["provenance"] = provenance;
    json cells = json::array();
    for (const auto& c : rep.cells) {
        json cj;
        cj["level"] = c.level;
        cj["seed_index"] = c.seed_index;
        cj["data_seed"] = c.data_seed;
        cj["status"] = to_string(c.status);
        cj["excluded"] = c.excluded;
        cj["note"] = c.note;
        if (!c.excluded) {
            cj["rho_hat"] = io::rho_to_json(c.rho_hat);
            cj["init"] = io::rho_to_json(c.init);
            cj["cost"] = c.cost;
            cj["error"] = c.error;
        }
        cells.push_back(cj);
    }
    j["cells"] = cells;
    return j;
}

inline std::string trend_csv(const TrendReport& rep) {
    std::string s = "# popdiff-trend v1 (numerical evidence only)\n";
    s += rep.axis + ",median_error,included,total\n";
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        int inc = 0, tot = 0;
        for (const auto& c : rep.cells)
            if (c.level == rep.levels[i]) {
                ++tot;
                inc += c.excluded ? 0 : 1;
            }
        s += std::to_string(rep.levels[i]) + "," + io::fmt(rep.errors[i]) + "," +
             std::to_string(inc) + "," + std::to_string(tot) + "\n";
    }
    return s;
}

}  // namespace popdiff
