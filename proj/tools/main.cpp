#include "hydrostat/config.hpp"
#include "hydrostat/io.hpp"
#include "hydrostat/verify.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace hydrostat;

namespace {

int default_threads() {
    if (const char* env = std::getenv("HYDROSTAT_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    int hw = int(std::thread::hardware_concurrency());
    return hw > 0 ? hw : 1;
}

void print_report(const AssumptionReport& rep) {
    std::cout << "parabolicity: nu_phi=" << format_double(rep.nu_phi)
              << " nu_psi=" << format_double(rep.nu_psi)
              << " pass=" << (rep.pass_parabolicity ? "yes" : "no (nu >= 2)") << "\n";
    std::cout << "norm bounds (delta=" << rep.delta << "): M_phi=" << format_double(rep.M_phi)
              << " M_grad_phi=" << format_double(rep.M_grad_phi)
              << " M_gamma=" << format_double(rep.M_gamma)
              << " M_psi_sup=" << format_double(rep.M_psi_sup)
              << " M_div_psi=" << format_double(rep.M_div_psi) << "\n";
    std::cout << "flags: phi_h_x3_independent=" << rep.phi_h_x3_independent
              << " phi3_boundary=" << rep.phi3_vanishes_on_boundary
              << " psi3_boundary=" << rep.psi3_vanishes_on_boundary << "\n";
}

// Fixed default initial condition: a smooth constrained velocity and a
// smooth temperature, both of unit L^2 norm. Runs are reproducible from the
// config alone.
SimState default_ic(const Grid& g) {
    SimState s;
    const double pi = 3.14159265358979323846;
    HVecField v(g);
    v.x = eval_on_grid(
        [&](double x1, double x2, double x3) {
            return -std::sin(x2) + 0.3 * std::cos(x1) * std::cos(pi * (x3 + g.h) / g.h);
        },
        g);
    v.y = eval_on_grid(
        [&](double x1, double x2, double x3) {
            return std::sin(x1) + 0.15 * std::sin(x2) * std::cos(pi * (x3 + g.h) / g.h);
        },
        g);
    s.v = hydrostatic_project(v);
    double vn = l2_norm(s.v);
    if (vn > 0.0) s.v *= 1.0 / vn;
    s.theta = eval_on_grid(
        [&](double x1, double x2, double x3) {
            return std::cos(x1) + 0.5 * std::sin(x2) * (1.0 + 0.4 * std::cos(pi * (x3 + g.h) / g.h));
        },
        g);
    double tn = l2_norm(s.theta);
    if (tn > 0.0) s.theta *= 1.0 / tn;
    return s;
}

struct TrajectoryOutput {
    std::vector<DiagnosticsRecord> records;
    std::vector<std::pair<std::int64_t, Snapshot>> snapshots;
    bool flagged = false;
};

int cmd_simulate(const std::string& config_path, int threads, bool allow_nonparabolic,
                 std::optional<std::uint64_t> seed_override) {
    SimConfigFile cfg;
    Grid grid;
    try {
        cfg = parse_config_file(config_path);
        grid = make_grid(cfg.nx, cfg.ny, cfg.nz, cfg.h);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    if (seed_override) cfg.base_seed = *seed_override;

    NoiseBasis basis = cfg.build_basis(grid);
    AssumptionReport rep = check_assumptions(basis, cfg.noise_delta);
    print_report(rep);
    if (!rep.pass_parabolicity) {
        if (!allow_nonparabolic) {
            std::cerr << "parabolicity gate: nu = " << rep.nu_max()
                      << " >= 2, refusing to run (pass --allow-nonparabolic to override)\n";
            return 2;
        }
        std::cout << "parabolicity gate overridden (--allow-nonparabolic)\n";
    }

    ForcingSpec forcing = cfg.build_forcing();
    StepperConfig sconfig = cfg.build_stepper_config();

    std::optional<StratCoefficients> strat;
    if (cfg.mode == StepperConfig::StratonovichCorrected) strat = strat_coefficients(basis);

    fs::create_directories(cfg.output_dir);

    std::vector<TrajectoryOutput> outputs(cfg.n_traj);
    SimState ic = default_ic(grid);

    parallel_for(cfg.n_traj, threads, [&](int traj) {
        BrownianDriver driver(cfg.base_seed, basis.n_modes(), cfg.dt);
        StepContext ctx;
        ctx.basis = &basis;
        if (strat) ctx.strat = &*strat;
        ctx.forcing = &forcing;
        ctx.driver = &driver;

        SimState s = ic;
        s.trajectory_index = traj;

        RunOptions opts;
        opts.n_steps = cfg.n_steps;
        opts.diag_cadence = cfg.diag_cadence;

        TrajectoryOutput& out = outputs[traj];
        RunCallbacks cbs;
        if (cfg.write_snapshots) {
            cbs.on_diagnostics = [&](const SimState& st, const DiagnosticsRecord&) {
                bool at_cadence = cfg.snapshots_every > 0 &&
                                  st.step_index % cfg.snapshots_every == 0;
                bool at_end = st.step_index == cfg.n_steps;
                if (at_cadence || at_end)
                    out.snapshots.push_back(
                        {st.step_index, Snapshot{grid, st.t, st.v, st.theta}});
            };
        }
        RunResult res = run(std::move(s), sconfig, ctx, opts, cbs);
        out.records = std::move(res.records);
        out.flagged = res.flag.has_value();
        if (cfg.write_snapshots) {
            bool already = !out.snapshots.empty() &&
                           out.snapshots.back().first == res.final_state.step_index;
            if (!already)
                out.snapshots.push_back({res.final_state.step_index,
                                         Snapshot{grid, res.final_state.t, res.final_state.v,
                                                  res.final_state.theta}});
        }
    });

    // single collector, trajectory order preserved
    bool any_flagged = false;
    std::vector<std::vector<DiagnosticsRecord>> all_records;
    for (int traj = 0; traj < cfg.n_traj; ++traj) {
        const TrajectoryOutput& out = outputs[traj];
        any_flagged = any_flagged || out.flagged;
        if (cfg.write_csv) {
            char name[64];
            std::snprintf(name, sizeof name, "traj_%04d.csv", traj);
            std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
            write_diagnostics_csv(f, traj, out.records);
        }
        for (const auto& [step, snap] : out.snapshots) {
            char name[64];
            std::snprintf(name, sizeof name, "snap_s%08lld_traj%04d.bin",
                          static_cast<long long>(step), traj);
            write_snapshot_file((fs::path(cfg.output_dir) / name).string(), snap);
        }
        all_records.push_back(out.records);
    }
    if (cfg.write_csv) {
        std::ofstream f(fs::path(cfg.output_dir) / "ensemble.csv", std::ios::binary);
        write_ensemble_csv(f, all_records);
    }

    if (any_flagged) {
        std::cout << "blow-up flagged; artifacts written to " << cfg.output_dir << "\n";
        return 3;
    }
    std::cout << "completed " << cfg.n_traj << " trajectories, " << cfg.n_steps
              << " steps; output in " << cfg.output_dir << "\n";
    return 0;
}

int cmd_check_noise(const std::string& config_path) {
    try {
        SimConfigFile cfg = parse_config_file(config_path);
        Grid grid = make_grid(cfg.nx, cfg.ny, cfg.nz, cfg.h);
        NoiseBasis basis = cfg.build_basis(grid);
        AssumptionReport rep = check_assumptions(basis, cfg.noise_delta);
        print_report(rep);
        return rep.pass_parabolicity ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

std::vector<Grid> parse_grids(const std::vector<std::string>& specs,
                              const std::vector<Grid>& fallback) {
    if (specs.empty()) return fallback;
    std::vector<Grid> out;
    for (const auto& s : specs) {
        int nx, ny, nz;
        if (std::sscanf(s.c_str(), "%dx%dx%d", &nx, &ny, &nz) != 3)
            throw std::invalid_argument("bad --grids entry '" + s + "' (want NXxNYxNZ)");
        out.push_back(make_grid(nx, ny, nz, 1.0));
    }
    return out;
}

int cmd_verify(const std::string& suite, const std::vector<std::string>& grid_specs,
               int threads) {
    std::vector<Grid> cancel_grids = parse_grids(
        grid_specs, {make_grid(8, 8, 9, 1.0), make_grid(16, 16, 17, 1.0),
                     make_grid(32, 32, 33, 1.0)});
    StratSuiteParams sp;
    sp.threads = threads;

    std::vector<SuiteResult> results;
    if (suite == "projection") {
        Grid g = grid_specs.empty() ? make_grid(16, 16, 9, 1.0) : cancel_grids.front();
        results.push_back(verify_projection(g, 100, 42));
    } else if (suite == "kadlec") {
        results.push_back(verify_kadlec(32, 32, 33));
    } else if (suite == "cancellation") {
        results.push_back(verify_cancellation(cancel_grids));
    } else if (suite == "strat") {
        results.push_back(verify_strat(sp));
    } else if (suite == "energy") {
        results.push_back(verify_energy(sp));
    } else if (suite == "all") {
        results = verify_all(cancel_grids, sp);
    } else {
        std::cerr << "unknown suite '" << suite
                  << "' (want projection|kadlec|cancellation|strat|energy|all)\n";
        return 1;
    }

    bool all_pass = true;
    for (const auto& r : results) {
        print_suite(std::cout, r);
        if (!r.pass()) {
            all_pass = false;
            for (const auto& c : r.checks)
                if (!c.pass)
                    std::cerr << "tolerance failed: " << r.name << '.' << c.name << "\n";
        }
    }
    return all_pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydrostat: stochastic primitive equations with transport noise "
                 "on the flat cylinder"};
    app.require_subcommand(1);

    int threads = default_threads();
    bool allow_nonparabolic = false;
    std::optional<std::uint64_t> seed_override;
    app.add_option("--threads", threads, "worker threads (default: hardware, or HYDROSTAT_THREADS)");
    app.add_flag("--allow-nonparabolic", allow_nonparabolic,
                 "run even if the parabolicity check fails");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override the config base seed");

    std::string config_path;
    auto* sim = app.add_subcommand("simulate", "run an ensemble from a config file");
    sim->add_option("config", config_path, "INI config path")->required();

    std::string check_config;
    auto* chk = app.add_subcommand("check-noise", "print the assumption report for a config");
    chk->add_option("config", check_config, "INI config path")->required();

    std::string suite;
    std::vector<std::string> grid_specs;
    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite", suite, "projection|kadlec|cancellation|strat|energy|all")
        ->required();
    ver->add_option("--grids", grid_specs, "grid list, e.g. 8x8x9 16x16x17 32x32x33");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*seed_opt) seed_override = seed_val;

    try {
        if (sim->parsed()) return cmd_simulate(config_path, threads, allow_nonparabolic, seed_override);
        if (chk->parsed()) return cmd_check_noise(check_config);
        if (ver->parsed()) return cmd_verify(suite, grid_specs, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
