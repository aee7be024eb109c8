// popdiff command-line front end. Exit codes: 0 success, 1 numerical failure
// (structured JSON on stderr), 2 usage or input error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "popdiff/popdiff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace popdiff;

namespace {

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error("usage", w) {}
};

bool is_usage_kind(const std::string& kind) {
    return kind == "usage" || kind == "config" || kind == "parse" || kind == "ingestion";
}

int report(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit", code}}.dump() << "\n";
    return code;
}

void write_json(const fs::path& path, const json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

std::vector<Episode> load(const io::RunConfig& cfg, const std::vector<std::string>& files) {
    std::vector<fs::path> paths(files.begin(), files.end());
    return io::load_episodes(paths, cfg.grid.tau, cfg.scaling);
}

RhoParams initial_rho(const io::RunConfig& cfg, const std::vector<Episode>& eps,
                      std::vector<std::string>& warnings) {
    if (cfg.init_mode == io::InitMode::explicit_rho) {
        fs::path p = cfg.init_rho_file;
        if (p.is_relative()) p = cfg.base_dir / p;
        return io::read_rho(p);
    }
    if (eps.size() < 2) throw UsageError("moment-based initialization needs at least two episodes");
    InitOptions io_opts;
    io_opts.optimizer = cfg.optimizer;
    Initialization init = initialize(eps, cfg.grid, io_opts);
    warnings = init.warnings;
    return init.rho;
}

int cmd_fit(const std::string& config, const std::vector<std::string>& files, const fs::path& out) {
    if (files.empty()) throw UsageError("fit needs at least one episode file");
    const io::RunConfig cfg = io::read_config(config);
    const auto eps = load(cfg, files);
    std::vector<std::string> warnings;
    const RhoParams init = initial_rho(cfg, eps, warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const FitResult fr = fit(eps, cfg.grid, init, cfg.fit_options());
    json j = io::fit_result_json(fr, cfg);
    j["init"] = io::rho_to_json(init);
    fs::create_directories(out);
    write_json(out / "fit_result.json", j);
    io::write_atomic(out / "cost_trace.csv", io::format_trace(fr.trace));
    std::cout << "status " << to_string(fr.status) << " cost " << io::fmt(fr.cost) << "\n";
    return 0;
}

int cmd_simulate(const std::string& config, const std::string& rho_file, const std::string& file,
                 const fs::path& out) {
    const io::RunConfig cfg = io::read_config(config);
    const RhoParams rho = io::read_rho(rho_file);
    const Episode ep = load(cfg, {file}).front();
    const Eigen::VectorXd y = population_output(rho, cfg.grid, ep.u, cfg.assembly());
    io::write_atomic(out, io::format_simulation(ep, y));
    return 0;
}

int cmd_synth(const std::string& config, const std::string& rho_file, const fs::path& out) {
    const io::RunConfig cfg = io::read_config(config);
    const RhoParams rho = io::read_rho(rho_file);
    SynthOptions so;
    so.n_episodes = cfg.synth_episodes;
    so.noise_sigma = cfg.synth_noise;
    so.seed = cfg.seed;
    so.mode = cfg.synth_mode;
    so.pulses = cfg.pulses;
    so.assembly = cfg.assembly();
    auto eps = generate_synthetic(rho, cfg.grid, so);
    // The episode file format holds nonnegative concentrations only.
    int clipped = 0;
    for (auto& ep : eps)
        for (double& y : ep.y_obs)
            if (y < 0.0) {
                y = 0.0;
                ++clipped;
            }
    if (clipped > 0) std::cerr << "warning: clipped " << clipped << " negative noisy observations to 0\n";
    fs::create_directories(out);
    for (const auto& ep : eps) io::write_episode(out / (ep.id + ".csv"), ep);
    std::cout << "wrote " << eps.size() << " episodes to " << out.string() << "\n";
    return 0;
}

int cmd_gradcheck(const std::string& config, const std::string& rho_file,
                  const std::vector<std::string>& files, double step) {
    if (files.empty()) throw UsageError("gradcheck needs at least one episode file");
    const io::RunConfig cfg = io::read_config(config);
    const RhoParams rho = io::read_rho(rho_file);
    const auto eps = load(cfg, files);
    ObjectiveOptions oo;
    oo.assembly = cfg.assembly();
    const CostReport adj = gradient_adjoint(rho, cfg.grid, eps, oo);
    const CostReport fd = gradient_fd(rho, cfg.grid, eps, step, oo);
    json comps = json::array();
    double worst = 0.0;
    for (int k = 0; k < kRhoDim; ++k) {
        const double scale = std::max({std::abs(fd.grad[k]), std::abs(adj.grad[k]), 1e-12});
        const double rel = std::abs(adj.grad[k] - fd.grad[k]) / scale;
        worst = std::max(worst, rel);
        comps.push_back({{"name", kRhoNames[k]},
                         {"adjoint", adj.grad[k]},
                         {"finite_difference", fd.grad[k]},
                         {"relative_error", rel}});
    }
    const bool ok = worst <= cfg.gradcheck_tol;
    std::cout << json{{"cost", adj.cost},
                      {"components", comps},
                      {"max_relative_error", worst},
                      {"tolerance", cfg.gradcheck_tol},
                      {"pass", ok}}
                     .dump(2)
              << "\n";
    return ok ? 0 : 1;
}

int cmd_bands(const std::string& config, const std::string& rho_file, const std::string& file,
              const fs::path& out) {
    const io::RunConfig cfg = io::read_config(config);
    const RhoParams rho = io::read_rho(rho_file);
    const Episode ep = load(cfg, {file}).front();
    const CredibleBand band = credible_band(rho, cfg.grid, ep.u, cfg.band_level,
                                            cfg.band_nsamples, cfg.seed, cfg.assembly());
    io::write_atomic(out, io::format_band(band, ep.t0, ep.tau));
    return 0;
}

int cmd_consistency(const std::string& config, const std::string& rho_file, const fs::path& out,
                    const std::string& norm) {
    const io::RunConfig cfg = io::read_config(config);
    const RhoParams rho = io::read_rho(rho_file);
    ConsistencyOptions co;
    co.nu_levels = cfg.consistency_levels;
    co.seeds = cfg.consistency_seeds;
    co.noise_sigma = cfg.consistency_noise;
    co.base_seed = cfg.seed;
    co.horizon = cfg.pulses.horizon;
    co.pulses = cfg.pulses;
    co.fit = cfg.fit_options();
    if (norm == "mu") co.norm = TrendNorm::mu;
    else if (norm == "rho") co.norm = TrendNorm::rho;
    else co.norm = TrendNorm::mean;
    const TrendReport rep = consistency_trend(rho, cfg.grid, co);
    json prov;
    prov["config_echo"] = io::config_echo(cfg);
    prov["seed"] = cfg.seed;
    prov["tau_schedule"] = "tau / 2^level_index, mu tau = synth.horizon";
    fs::create_directories(out);
    write_json(out / "consistency.json", trend_json(rep, rho, prov));
    io::write_atomic(out / "consistency.csv", trend_csv(rep));
    std::cout << trend_csv(rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population diffusion model: fit, simulate and bands"};
    app.require_subcommand(1);

    std::string config, rho_file, episode;
    std::vector<std::string> episodes;
    std::string out_dir = ".", out_file;
    double fd_step = 1e-6;
    std::string norm = "mu";

    auto* fit_cmd = app.add_subcommand("fit", "fit the truncated-normal population law");
    fit_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("episodes", episodes, "episode CSV files")->check(CLI::ExistingFile);
    fit_cmd->add_option("-o,--out-dir", out_dir, "directory for fit_result.json and cost_trace.csv");

    auto* sim_cmd = app.add_subcommand("simulate", "population output against one episode");
    sim_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("rho", rho_file, "rho JSON")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("episode", episode, "episode CSV")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("-o,--out", out_file, "output CSV")->required();

    auto* synth_cmd = app.add_subcommand("synth", "write synthetic episodes");
    synth_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("rho", rho_file, "rho JSON")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("-o,--out-dir", out_dir, "directory for episode CSVs");

    auto* grad_cmd = app.add_subcommand("gradcheck", "adjoint gradient against finite differences");
    grad_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    grad_cmd->add_option("rho", rho_file, "rho JSON")->required()->check(CLI::ExistingFile);
    grad_cmd->add_option("episodes", episodes, "episode CSV files")->check(CLI::ExistingFile);
    grad_cmd->add_option("--step", fd_step, "relative finite-difference step")
        ->check(CLI::PositiveNumber);

    auto* band_cmd = app.add_subcommand("bands", "credible band for one episode's input");
    band_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    band_cmd->add_option("rho", rho_file, "rho JSON")->required()->check(CLI::ExistingFile);
    band_cmd->add_option("episode", episode, "episode CSV")->required()->check(CLI::ExistingFile);
    band_cmd->add_option("-o,--out", out_file, "output CSV")->required();

    auto* cons_cmd = app.add_subcommand("consistency", "estimator error against episode count");
    cons_cmd->add_option("config", config, "run config")->required()->check(CLI::ExistingFile);
    cons_cmd->add_option("rho", rho_file, "rho JSON of the generating law")
        ->required()
        ->check(CLI::ExistingFile);
    cons_cmd->add_option("-o,--out-dir", out_dir, "directory for consistency.{json,csv}");
    cons_cmd->add_option("--norm", norm, "error norm")->check(CLI::IsMember({"mu", "rho", "mean"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*fit_cmd) return cmd_fit(config, episodes, out_dir);
        if (*sim_cmd) return cmd_simulate(config, rho_file, episode, out_file);
        if (*synth_cmd) return cmd_synth(config, rho_file, out_dir);
        if (*grad_cmd) return cmd_gradcheck(config, rho_file, episodes, fd_step);
        if (*band_cmd) return cmd_bands(config, rho_file, episode, out_file);
        if (*cons_cmd) return cmd_consistency(config, rho_file, out_dir, norm);
    } catch (const Error& e) {
        return report(e.kind(), e.what(), is_usage_kind(e.kind()) ? 2 : 1);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
    return 2;
}
