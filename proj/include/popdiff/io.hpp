#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "popdiff/density.hpp"
#include "popdiff/errors.hpp"
#include "popdiff/forward.hpp"
#include "popdiff/optimizer.hpp"
#include "popdiff/synthetic.hpp"
#include "popdiff/uncertainty.hpp"

namespace popdiff::io {

using json = nlohmann::json;

inline constexpr std::string_view kEpisodeHeader = "# popdiff-episode v1";
inline constexpr std::string_view kBandHeader = "# popdiff-band v1";
inline constexpr std::string_view kSimulateHeader = "# popdiff-simulate v1";
inline constexpr std::string_view kTraceHeader = "# popdiff-trace v1";

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": not a number: '" + s + "'");
    }
}

inline long long parse_integer(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": not an integer: '" + s + "'");
    }
}

/// Writes `body` to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& body) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IngestionError("cannot open " + tmp.string() + " for writing");
        out << body;
        out.flush();
        if (!out) throw IngestionError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IngestionError("cannot rename onto " + path.string());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- episodes

struct Sample {
    double t = 0.0;
    double value = 0.0;
};

/// Raw two-channel episode file; times in hours, nondecreasing per channel.
struct RawEpisode {
    std::string id;
    std::vector<Sample> brac;
    std::vector<Sample> tac;
};

inline RawEpisode parse_raw_episode(std::string_view text, const std::string& id,
                                    const std::string& source) {
    RawEpisode raw;
    raw.id = id;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    bool header_seen = false, columns_seen = false;
    auto where = [&] { return source + ":" + std::to_string(lineno); };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty()) continue;
        if (!header_seen) {
            if (s.rfind("# popdiff-episode", 0) != 0)
                throw ParseError(where() + ": missing '# popdiff-episode' header");
            if (s != kEpisodeHeader) throw ParseError(where() + ": unsupported version '" + s + "'");
            header_seen = true;
            continue;
        }
        if (s[0] == '#') continue;
        if (!columns_seen) {
            if (s != "t_hours,channel,value")
                throw ParseError(where() + ": expected columns 't_hours,channel,value'");
            columns_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(s);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(trim(cell));
        if (f.size() != 3) throw ParseError(where() + ": expected 3 fields");
        const double t = parse_double(f[0], where());
        const double v = parse_double(f[2], where());
        if (!std::isfinite(t) || !std::isfinite(v)) throw ParseError(where() + ": non-finite value");
        if (v < 0.0) throw ParseError(where() + ": negative concentration");
        std::vector<Sample>* ch = nullptr;
        if (f[1] == "brac") ch = &raw.brac;
        else if (f[1] == "tac") ch = &raw.tac;
        else throw ParseError(where() + ": unknown channel '" + f[1] + "'");
        if (!ch->empty() && t < ch->back().t)
            throw ParseError(where() + ": time decreases within channel " + f[1]);
        ch->push_back({t, v});
    }
    if (!header_seen) throw ParseError(source + ": empty file");
    if (!columns_seen) throw ParseError(source + ": missing column header");
    if (raw.brac.size() < 2) throw IngestionError(source + ": brac channel needs at least 2 rows");
    if (raw.tac.size() < 2) throw IngestionError(source + ": tac channel needs at least 2 rows");
    return raw;
}

inline RawEpisode read_raw_episode(const std::filesystem::path& path) {
    return parse_raw_episode(read_text(path), path.stem().string(), path.string());
}

/// Piecewise-linear interpolant; exact at sample times.
inline double interpolate(const std::vector<Sample>& s, double t) {
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const Sample& a, double v) { return a.t < v; });
    if (it != s.end() && it->t == t) return it->value;
    if (it == s.begin() || it == s.end()) throw IngestionError("interpolation outside channel range");
    const Sample& hi = *it;
    const Sample& lo = *(it - 1);
    const double w = (t - lo.t) / (hi.t - lo.t);
    return lo.value + w * (hi.value - lo.value);
}

enum class ScalingMode { none, paper };

/// Reference levels of 0 mean "maximum of the channel over the dataset".
struct Scaling {
    ScalingMode mode = ScalingMode::none;
    double brac_ref = 0.0;
    double tac_ref = 0.0;
};

inline ScalingMode parse_scaling_mode(const std::string& s) {
    if (s == "none") return ScalingMode::none;
    if (s == "paper") return ScalingMode::paper;
    throw ConfigError("unknown scaling mode '" + s + "'");
}

inline const char* to_string(ScalingMode m) { return m == ScalingMode::none ? "none" : "paper"; }

/// Grid t0 + j tau, j = 0..mu, with t0 the later channel start and
/// t0 + mu tau no later than the earlier channel end.
inline Episode resample(const RawEpisode& raw, double tau, double brac_scale = 1.0,
                        double tac_scale = 1.0) {
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    const double t0 = std::max(raw.brac.front().t, raw.tac.front().t);
    const double t1 = std::min(raw.brac.back().t, raw.tac.back().t);
    if (!(t1 > t0)) throw IngestionError("episode " + raw.id + ": channel time ranges do not overlap");
    const int steps = static_cast<int>(std::floor((t1 - t0) / tau + 1e-9));
    if (steps < 1) throw IngestionError("episode " + raw.id + ": overlap shorter than one interval");
    Episode ep;
    ep.id = raw.id;
    ep.tau = tau;
    ep.t0 = t0;
    ep.u.resize(steps);
    ep.y_obs.resize(steps + 1);
    for (int j = 0; j <= steps; ++j) {
        const double t = std::min(t0 + j * tau, t1);
        if (j < steps) ep.u[j] = interpolate(raw.brac, t) / brac_scale;
        ep.y_obs[j] = interpolate(raw.tac, t) / tac_scale;
    }
    return ep;
}

inline Episode load_episode(const std::filesystem::path& path, double tau) {
    return resample(read_raw_episode(path), tau);
}

/// Loads a dataset, resolving "dataset max" reference levels across all files.
inline std::vector<Episode> load_episodes(const std::vector<std::filesystem::path>& paths,
                                          double tau, const Scaling& scaling = {}) {
    std::vector<RawEpisode> raws;
    for (const auto& p : paths) raws.push_back(read_raw_episode(p));
    double brac_scale = 1.0, tac_scale = 1.0;
    if (scaling.mode == ScalingMode::paper) {
        double bmax = 0.0, tmax = 0.0;
        for (const auto& r : raws) {
            for (const auto& s : r.brac) bmax = std::max(bmax, s.value);
            for (const auto& s : r.tac) tmax = std::max(tmax, s.value);
        }
        brac_scale = scaling.brac_ref > 0.0 ? scaling.brac_ref : bmax;
        tac_scale = scaling.tac_ref > 0.0 ? scaling.tac_ref : tmax;
        if (!(brac_scale > 0.0) || !(tac_scale > 0.0))
            throw IngestionError("scaling reference level is zero (all-zero channel)");
    }
    std::vector<Episode> out;
    for (const auto& r : raws) out.push_back(resample(r, tau, brac_scale, tac_scale));
    return out;
}

/// Grid values only; u at the final node repeats the last held value.
inline std::string format_episode(const Episode& ep) {
    std::string s(kEpisodeHeader);
    s += "\nt_hours,channel,value\n";
    const int steps = ep.steps();
    for (int j = 0; j <= steps; ++j) {
        const double u = steps == 0 ? 0.0 : ep.u[std::min(j, steps - 1)];
        s += fmt(ep.t0 + j * ep.tau) + ",brac," + fmt(u) + "\n";
    }
    for (int j = 0; j <= steps; ++j) s += fmt(ep.t0 + j * ep.tau) + ",tac," + fmt(ep.y_obs[j]) + "\n";
    return s;
}

inline void write_episode(const std::filesystem::path& path, const Episode& ep) {
    write_atomic(path, format_episode(ep));
}

// ------------------------------------------------------------- time series

inline std::string format_band(const CredibleBand& band, double t0, double tau) {
    std::string s(kBandHeader);
    s += "\nt_hours,lower,mean,upper\n";
    for (Eigen::Index j = 0; j < band.lower.size(); ++j)
        s += fmt(t0 + static_cast<double>(j) * tau) + "," + fmt(band.lower[j]) + "," +
             fmt(band.mean_output[j]) + "," + fmt(band.upper[j]) + "\n";
    return s;
}

inline std::string format_simulation(const Episode& ep, const Eigen::VectorXd& predicted) {
    std::string s(kSimulateHeader);
    s += "\nt_hours,brac,observed,predicted\n";
    const int steps = ep.steps();
    for (int j = 0; j <= steps; ++j) {
        const double u = ep.u[std::min(j, steps - 1)];
        s += fmt(ep.t0 + j * ep.tau) + "," + fmt(u) + "," + fmt(ep.y_obs[j]) + "," +
             fmt(predicted[j]) + "\n";
    }
    return s;
}

inline std::string format_trace(const std::vector<TraceEntry>& trace) {
    std::string s(kTraceHeader);
    s += "\niteration,cost,grad_norm,step_norm\n";
    for (const auto& e : trace)
        s += std::to_string(e.iteration) + "," + fmt(e.cost) + "," + fmt(e.grad_norm) + "," +
             fmt(e.step_norm) + "\n";
    return s;
}

// -------------------------------------------------------------------- rho

inline json rho_to_json(const RhoParams& rho) {
    json j = json::object();
    const auto v = rho.to_array();
    for (int k = 0; k < kRhoDim; ++k) j[kRhoNames[k]] = v[k];
    return j;
}

inline RhoParams rho_from_json(const json& j, const std::string& source) {
    if (!j.is_object()) throw ParseError(source + ": rho must be a JSON object");
    const json& r = j.contains("rho_hat") ? j.at("rho_hat") : j;
    RhoVector v{};
    for (int k = 0; k < kRhoDim; ++k) {
        if (!r.contains(kRhoNames[k]) || !r.at(kRhoNames[k]).is_number())
            throw ParseError(source + ": missing numeric field '" + kRhoNames[k] + "'");
        v[k] = r.at(kRhoNames[k]).get<double>();
    }
    for (auto it = r.begin(); it != r.end(); ++it)
        if (std::find(kRhoNames.begin(), kRhoNames.end(), it.key()) == kRhoNames.end())
            throw ParseError(source + ": unknown rho field '" + it.key() + "'");
    RhoParams rho = RhoParams::from_array(v);
    rho.validate();
    return rho;
}

inline RhoParams read_rho(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return rho_from_json(j, path.string());
}

inline void write_rho(const std::filesystem::path& path, const RhoParams& rho) {
    write_atomic(path, rho_to_json(rho).dump(2) + "\n");
}

// ------------------------------------------------------------------ config

enum class InitMode { moment, explicit_rho };

/// Effective run configuration; every field has a documented range.
struct RunConfig {
    GridSpec grid{};
    OptimizerOptions optimizer{};
    int cell_quad_order = kDefaultCellQuadOrder;
    double support_hi = 100.0;
    InitMode init_mode = InitMode::moment;
    std::string init_rho_file;  // relative to the config file
    double band_level = 0.75;
    int band_nsamples = 1000;
    std::uint64_t seed = 1;
    Scaling scaling{};
    int synth_episodes = 10;
    double synth_noise = 0.0;
    SynthMode synth_mode = SynthMode::population;
    PulseSpec pulses{};
    std::vector<int> consistency_levels{2, 8, 32};
    int consistency_seeds = 5;
    double consistency_noise = 0.01;
    double gradcheck_tol = 1e-4;
    std::filesystem::path base_dir;

    AssemblyOptions assembly() const { return {cell_quad_order, true}; }

    FitOptions fit_options() const {
        FitOptions f;
        f.optimizer = optimizer;
        f.objective.assembly = assembly();
        f.bounds.hi = support_hi;
        return f;
    }
};

namespace detail {

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<json(RunConfig)> get;
};

inline void require(bool ok, const std::string& key, const std::string& range) {
    if (!ok) throw ConfigError("config key '" + key + "' out of range (" + range + ")");
}

inline Field real_field(std::function<double&(RunConfig&)> ref, double lo, double hi,
                        bool open_lo) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) {
                const double x = parse_double(v, "config key '" + k + "'");
                const bool ok = std::isfinite(x) && (open_lo ? x > lo : x >= lo) && x <= hi;
                require(ok, k, (open_lo ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + "]");
                ref(c) = x;
            },
            [=](RunConfig c) { return json(ref(c)); }};
}

inline Field integer(std::function<int&(RunConfig&)> ref, int lo, int hi) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) {
                const long long x = parse_integer(v, "config key '" + k + "'");
                require(x >= lo && x <= hi, k, std::to_string(lo) + ".." + std::to_string(hi));
                ref(c) = static_cast<int>(x);
            },
            [=](RunConfig c) { return json(ref(c)); }};
}

inline const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["grid.n"] = integer([](RunConfig& c) -> int& { return c.grid.n; }, 1, 256);
        t["grid.m1"] = integer([](RunConfig& c) -> int& { return c.grid.m1; }, 1, 64);
        t["grid.m2"] = integer([](RunConfig& c) -> int& { return c.grid.m2; }, 1, 64);
        t["grid.tau"] = real_field([](RunConfig& c) -> double& { return c.grid.tau; }, 0.0, 24.0, true);
        t["optimizer.max_iter"] =
            integer([](RunConfig& c) -> int& { return c.optimizer.max_iter; }, 0, 100000);
        t["optimizer.gtol"] =
            real_field([](RunConfig& c) -> double& { return c.optimizer.gtol; }, 0.0, 1.0, true);
        t["optimizer.xtol"] =
            real_field([](RunConfig& c) -> double& { return c.optimizer.xtol; }, 0.0, 1.0, true);
        t["optimizer.max_backtracks"] =
            integer([](RunConfig& c) -> int& { return c.optimizer.max_backtracks; }, 1, 200);
        t["quadrature.cell_order"] =
            integer([](RunConfig& c) -> int& { return c.cell_quad_order; }, 1, 64);
        t["support.upper"] =
            real_field([](RunConfig& c) -> double& { return c.support_hi; }, 0.0, 1e6, true);
        t["init.mode"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                              if (v == "moment") c.init_mode = InitMode::moment;
                              else if (v == "explicit") c.init_mode = InitMode::explicit_rho;
                              else throw ConfigError("config key '" + k + "': expected moment or explicit");
                          },
                          [](const RunConfig& c) {
                              return json(c.init_mode == InitMode::moment ? "moment" : "explicit");
                          }};
        t["init.rho_file"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                                  c.init_rho_file = v;
                              },
                              [](const RunConfig& c) { return json(c.init_rho_file); }};
        t["bands.level"] =
            real_field([](RunConfig& c) -> double& { return c.band_level; }, 0.0, 1.0, true);
        t["bands.nsamples"] =
            integer([](RunConfig& c) -> int& { return c.band_nsamples; }, kMinBandSamples, 10000000);
        t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         const long long x = parse_integer(v, "config key '" + k + "'");
                         require(x >= 0, k, ">= 0");
                         c.seed = static_cast<std::uint64_t>(x);
                     },
                     [](const RunConfig& c) { return json(c.seed); }};
        t["scaling.mode"] = {[](RunConfig& c, const std::string&, const std::string& v) {
                                 c.scaling.mode = parse_scaling_mode(v);
                             },
                             [](const RunConfig& c) { return json(to_string(c.scaling.mode)); }};
        t["scaling.brac_ref"] =
            real_field([](RunConfig& c) -> double& { return c.scaling.brac_ref; }, 0.0, 1e12, false);
        t["scaling.tac_ref"] =
            real_field([](RunConfig& c) -> double& { return c.scaling.tac_ref; }, 0.0, 1e12, false);
        t["synth.episodes"] = integer([](RunConfig& c) -> int& { return c.synth_episodes; }, 1, 100000);
        t["synth.noise_sigma"] =
            real_field([](RunConfig& c) -> double& { return c.synth_noise; }, 0.0, 1e6, false);
        t["synth.mode"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                               if (v == "population") c.synth_mode = SynthMode::population;
                               else if (v == "episode") c.synth_mode = SynthMode::episode;
                               else throw ConfigError("config key '" + k + "': expected population or episode");
                           },
                           [](const RunConfig& c) {
                               return json(c.synth_mode == SynthMode::population ? "population"
                                                                                 : "episode");
                           }};
        t["synth.horizon"] =
            real_field([](RunConfig& c) -> double& { return c.pulses.horizon; }, 0.0, 1e4, true);
        t["synth.pulses_min"] = integer([](RunConfig& c) -> int& { return c.pulses.count_min; }, 0, 100);
        t["synth.pulses_max"] = integer([](RunConfig& c) -> int& { return c.pulses.count_max; }, 0, 100);
        t["synth.height_min"] =
            real_field([](RunConfig& c) -> double& { return c.pulses.height_min; }, 0.0, 1e6, false);
        t["synth.height_max"] =
            real_field([](RunConfig& c) -> double& { return c.pulses.height_max; }, 0.0, 1e6, false);
        t["synth.width_min"] =
            real_field([](RunConfig& c) -> double& { return c.pulses.width_min; }, 0.0, 1e4, true);
        t["synth.width_max"] =
            real_field([](RunConfig& c) -> double& { return c.pulses.width_max; }, 0.0, 1e4, true);
        t["consistency.levels"] = {
            [](RunConfig& c, const std::string& k, const std::string& v) {
                std::vector<int> levels;
                std::stringstream ss(v);
                for (std::string cell; std::getline(ss, cell, ',');) {
                    const long long x = parse_integer(trim(cell), "config key '" + k + "'");
                    require(x >= 1 && x <= 10000, k, "1..10000 each");
                    levels.push_back(static_cast<int>(x));
                }
                require(levels.size() >= 3 && std::is_sorted(levels.begin(), levels.end()) &&
                            std::adjacent_find(levels.begin(), levels.end()) == levels.end(),
                        k, "at least 3 strictly increasing levels");
                c.consistency_levels = levels;
            },
            [](const RunConfig& c) { return json(c.consistency_levels); }};
        t["consistency.seeds"] = integer([](RunConfig& c) -> int& { return c.consistency_seeds; }, 5, 1000);
        t["consistency.noise_sigma"] =
            real_field([](RunConfig& c) -> double& { return c.consistency_noise; }, 0.0, 1e6, false);
        t["gradcheck.tolerance"] =
            real_field([](RunConfig& c) -> double& { return c.gradcheck_tol; }, 0.0, 1.0, true);
        return t;
    }();
    return table;
}

}  // namespace detail

/// Flat `key = value` text; `#` starts a comment line. Unknown keys and
/// repeated keys are rejected.
inline RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const auto& table = detail::fields();
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError(where + ": repeated key '" + key + "'");
        seen.push_back(key);
        try {
            it->second.set(cfg, key, value);
        } catch (const ParseError& e) {
            throw ConfigError(where + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    if (cfg.pulses.count_min > cfg.pulses.count_max)
        throw ConfigError(source + ": synth.pulses_min exceeds synth.pulses_max");
    if (cfg.pulses.height_min > cfg.pulses.height_max)
        throw ConfigError(source + ": synth.height_min exceeds synth.height_max");
    if (cfg.pulses.width_min > cfg.pulses.width_max)
        throw ConfigError(source + ": synth.width_min exceeds synth.width_max");
    if (cfg.init_mode == InitMode::explicit_rho && cfg.init_rho_file.empty())
        throw ConfigError(source + ": init.mode = explicit needs init.rho_file");
    cfg.grid.validate();
    return cfg;
}

inline RunConfig read_config(const std::filesystem::path& path) {
    RunConfig cfg = parse_config(read_text(path), path.string());
    cfg.base_dir = path.parent_path();
    return cfg;
}

inline json config_echo(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [key, field] : detail::fields()) j[key] = field.get(cfg);
    return j;
}

// ------------------------------------------------------------- fit result

inline json sigma_json(const RhoParams& rho) {
    const Eigen::Matrix2d s = sigma_from_l(rho);
    return json::array({json::array({s(0, 0), s(0, 1)}), json::array({s(1, 0), s(1, 1)})});
}

inline json fit_result_json(const FitResult& fr, const RunConfig& cfg) {
    json j;
    j["rho_hat"] = rho_to_json(fr.rho_hat);
    j["sigma"] = sigma_json(fr.rho_hat);
    j["status"] = to_string(fr.status);
    j["cost"] = fr.cost;
    json trace = json::array();
    for (const auto& e : fr.trace)
        trace.push_back({{"iteration", e.iteration},
                         {"cost", e.cost},
                         {"grad_norm", e.grad_norm},
                         {"step_norm", e.step_norm}});
    j["trace"] = trace;
    j["n_cost_evals"] = fr.n_cost_evals;
    j["n_grad_evals"] = fr.n_grad_evals;
    j["config_echo"] = config_echo(cfg);
    j["seed"] = cfg.seed;
    return j;
}

}  // namespace popdiff::io
