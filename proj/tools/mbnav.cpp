// mbnav: command-line front end for the microrobot navigation simulator.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "mbnav/analysis.hpp"
#include "mbnav/config.hpp"
#include "mbnav/errors.hpp"
#include "mbnav/sweep.hpp"
#include "mbnav/validation.hpp"

namespace fs = std::filesystem;
using namespace mbnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct GlobalOptions {
    std::string config;
    std::string out_dir;
    unsigned workers = 0;
    std::string gravity;
    std::string flow;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig c = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (!g.out_dir.empty()) c.out_dir = g.out_dir;
    if (g.workers > 0) c.workers = g.workers;
    if (!g.gravity.empty()) c.gravity = g.gravity == "on";
    if (!g.flow.empty()) c.flow = g.flow;
    return c;
}

fs::path output_path(const RunConfig& c, const std::string& explicit_path, const std::string& default_name) {
    const fs::path p = explicit_path.empty() ? c.out_dir / default_name : fs::path(explicit_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

DesignLevels resolve_design(const std::string& design) {
    if (design == "table2") return table2_levels();
    if (design == "table4") return table4_levels();
    if (design.rfind("custom:", 0) == 0) {
        try {
            return load_design(design.substr(7));
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("--design: expected table2, table4 or custom:<file>, got '" + design + "'");
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::optional<double> d_um;
    std::optional<std::string> artery;
    std::optional<double> u_max;
    std::optional<int> entrance;
    std::optional<int> upstream_k;
    std::optional<int> downstream_k;
    std::string trajectory;
    bool no_trajectory = false;
};

int cmd_simulate(RunConfig c, const SimulateOptions& o) {
    if (o.d_um) c.d_um = *o.d_um;
    if (o.artery) c.artery = *o.artery;
    if (o.u_max) c.u_max = *o.u_max;
    if (o.entrance) c.entrance = *o.entrance;
    if (o.upstream_k) c.upstream_k = *o.upstream_k;
    if (o.downstream_k) c.downstream_k = *o.downstream_k;
    const SweepSetup setup = make_setup(c);
    const ScenarioSpec spec = c.scenario();

    const BifurcationGeometry g = setup.geometry(spec);
    const auto flow = setup.flow(g, spec);
    Microrobot robot = setup.robot;
    robot.d_p = spec.d_p;
    const Vec3 start = entrance_positions(g, robot.radius())[spec.entrance - 1];
    const TargetPlan plan = place_targets(g, spec.d_p, spec.upstream_k, spec.downstream_k);
    SimulationSettings settings = setup.settings;
    settings.record_path = !o.no_trajectory;
    const TrajectoryRecord rec = run_trajectory(robot, start, plan, g, *flow, setup.mode(spec), settings);

    if (!o.no_trajectory) {
        const fs::path path = output_path(c, o.trajectory, "trajectory.csv");
        auto out = open_out(path);
        out << "# units: t s, x y z m, ux uy uz m/s (microrobot), gradx grady gradz T/m\n";
        out << "t,x,y,z,ux,uy,uz,gradx,grady,gradz,region,collision_flag\n";
        out << std::setprecision(10);
        for (const auto& p : rec.path) {
            out << p.t << ',' << p.position.x << ',' << p.position.y << ',' << p.position.z << ',' << p.velocity.x
                << ',' << p.velocity.y << ',' << p.velocity.z << ',' << p.grad_B.x << ',' << p.grad_B.y << ','
                << p.grad_B.z << ",G" << static_cast<int>(p.region) << ',' << (p.collision ? 1 : 0) << '\n';
        }
    }

    std::ostringstream line;
    line << std::setprecision(6) << "outcome=" << to_string(rec.outcome) << " collisions=" << rec.collisions
         << " steps=" << rec.steps << " transit_s=" << rec.transit_time;
    for (int i = 0; i < 3; ++i) {
        const RegionSummary s = summarize_region(rec.magnitude[i], rec.azimuth[i]);
        line << " G" << i + 1 << "_mean=" << s.mean << " G" << i + 1 << "_median=" << s.median;
    }
    std::cout << line.str() << '\n';
    return rec.outcome == Outcome::Desired ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
    std::string design = "table2";
    std::string mode;
    std::string fit;
    std::string out;
};

int cmd_sweep(RunConfig c, const SweepOptions& o) {
    if (!o.mode.empty()) c.mode = o.mode;
    const auto grid = factorial_grid(resolve_design(o.design));
    SweepSetup setup = make_setup(c);
    if (c.mode == "constant" && !o.fit.empty()) {
        const FitModel model = load_fit(o.fit);
        setup.mode = [model, comp = c.gravity_compensation](const ScenarioSpec& s) {
            return ControllerMode{replay_mode(model, s.d_p, comp)};
        };
    } else if (!o.fit.empty()) {
        throw ConfigError("--fit only applies to --mode constant");
    }
    const auto results = run_sweep(grid, setup, c.workers);
    const fs::path path = output_path(c, o.out, "results.csv");
    save_results_csv(path, results);
    std::cout << "scenarios=" << results.size() << " success=" << std::setprecision(6) << navigation_success(results)
              << " out=" << path.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
    std::string in;
    bool maps = false;
    bool boxplots = false;
    bool table3 = false;
};

std::string level_tag(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

int cmd_analyze(const RunConfig& c, AnalyzeOptions o) {
    const auto results = load_results_csv(o.in);
    if (!o.maps && !o.boxplots && !o.table3) o.maps = o.boxplots = o.table3 = true;
    fs::create_directories(c.out_dir);
    if (o.maps) {
        std::set<std::pair<std::string, double>> keys;
        for (const auto& r : results) keys.insert({r.spec.artery, r.spec.u_max});
        static const char* layers[] = {"G1", "G2", "G3", "collisions"};
        for (const auto& [artery, u] : keys) {
            const auto maps = gradient_maps(results, artery, u);
            for (int layer = 0; layer < 4; ++layer) {
                auto out = open_out(c.out_dir / ("map_" + artery + "_" + level_tag(u) + "_" + layers[layer] + ".csv"));
                write_map_csv(out, maps, layer);
            }
        }
        std::cout << "maps: " << keys.size() * 4 << " files\n";
    }
    if (o.boxplots) {
        std::vector<GroupStats> all;
        for (Factor f : {Factor::Diameter, Factor::Artery, Factor::Velocity, Factor::Entrance,
                         Factor::UpstreamTarget, Factor::DownstreamTarget}) {
            auto g = grouped_boxplots(results, f);
            all.insert(all.end(), g.begin(), g.end());
        }
        auto out = open_out(c.out_dir / "boxplots.csv");
        write_boxplots_csv(out, all);
        std::cout << "boxplots: " << all.size() << " groups\n";
    }
    if (o.table3) {
        const auto rows = median_ratio_table(results);
        auto out = open_out(c.out_dir / "table3.csv");
        write_median_ratio_csv(out, rows);
        write_median_ratio_csv(std::cout, rows);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitOptions {
    std::string in;
    std::string basis = "inv";
    std::string out;
};

int cmd_fit(const RunConfig& c, const FitOptions& o) {
    const auto results = load_results_csv(o.in);
    const FitModel model = fit_predictive_equations(diameter_medians(results), parse_fit_basis(o.basis));
    const fs::path path = output_path(c, o.out, "fit.json");
    save_fit(path, model);
    std::cout << fit_to_json(model) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReplayOptions {
    std::string fit;
    std::string design = "table2";
    std::string dynamic;
};

int cmd_replay(RunConfig c, const ReplayOptions& o) {
    const FitModel model = load_fit(o.fit);
    const auto grid = factorial_grid(resolve_design(o.design));
    fs::create_directories(c.out_dir);

    std::vector<ScenarioResult> dynamic;
    if (!o.dynamic.empty()) {
        dynamic = load_results_csv(o.dynamic);
    } else {
        c.mode = "dynamic";
        dynamic = run_sweep(grid, make_setup(c), c.workers);
        save_results_csv(c.out_dir / "replay_dynamic.csv", dynamic);
    }

    c.mode = "constant";
    SweepSetup setup = make_setup(c);
    setup.mode = [&model, comp = c.gravity_compensation](const ScenarioSpec& s) {
        return ControllerMode{replay_mode(model, s.d_p, comp)};
    };
    const auto constant = run_sweep(grid, setup, c.workers);
    save_results_csv(c.out_dir / "replay_constant.csv", constant);

    const ReplayReport report = replay_comparison(dynamic, constant, model);
    {
        auto out = open_out(c.out_dir / "replay_report.txt");
        write_replay_report(out, report);
    }
    {
        auto out = open_out(c.out_dir / "replay.csv");
        write_replay_csv(out, report);
    }
    write_replay_report(std::cout, report);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Magnetic microrobot navigation in cerebral artery bifurcations"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    app.add_option("--config", global.config, "Key-value run configuration file")->check(CLI::ExistingFile);
    app.add_option("--out-dir", global.out_dir, "Directory for output files");
    app.add_option("--workers", global.workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--gravity", global.gravity, "Gravity on|off")->check(CLI::IsMember({"on", "off"}));
    app.add_option("--flow", global.flow, "analytic | grid:<path>");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run one trajectory and write its CSV dump");
    simulate->add_option("--d-um", sim.d_um, "Microrobot diameter (um)");
    simulate->add_option("--artery", sim.artery, "Artery preset (ACA, MCA, PCA)");
    simulate->add_option("--u-max", sim.u_max, "Inlet centreline velocity (m/s)");
    simulate->add_option("--entrance", sim.entrance, "Entrance position 1..5");
    simulate->add_option("--upstream-k", sim.upstream_k, "Upstream target offset in diameters");
    simulate->add_option("--downstream-k", sim.downstream_k, "Downstream target offset in diameters");
    simulate->add_option("--trajectory", sim.trajectory, "Trajectory CSV path (default <out-dir>/trajectory.csv)");
    simulate->add_flag("--no-trajectory", sim.no_trajectory, "Only print the summary line");

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Run a full factorial design");
    sweep->add_option("--design", sw.design, "table2 | table4 | custom:<file>");
    sweep->add_option("--mode", sw.mode, "Controller mode")->check(CLI::IsMember({"dynamic", "constant"}));
    sweep->add_option("--fit", sw.fit, "Fit JSON supplying constant gradients per diameter")->check(CLI::ExistingFile);
    sweep->add_option("--out", sw.out, "Results CSV path (default <out-dir>/results.csv)");

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Gradient maps, boxplot statistics and median ratios");
    analyze->add_option("--in", an.in, "Results CSV")->required()->check(CLI::ExistingFile);
    analyze->add_flag("--maps", an.maps, "Write gradient and collision maps");
    analyze->add_flag("--boxplots", an.boxplots, "Write boxplot statistics per factor level");
    analyze->add_flag("--table3", an.table3, "Write medians at the extreme factor levels");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Fit region gradients against microrobot diameter");
    fit->add_option("--in", fo.in, "Results CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--basis", fo.basis, "inv: {1, 1/d, 1/d^2}; poly: {1, d, d^2}")
        ->check(CLI::IsMember({"inv", "poly"}));
    fit->add_option("--out", fo.out, "Fit JSON path (default <out-dir>/fit.json)");

    ReplayOptions ro;
    auto* replay = app.add_subcommand("replay", "Replay a design with fitted constant gradients");
    replay->add_option("--fit", ro.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
    replay->add_option("--design", ro.design, "table2 | table4 | custom:<file>");
    replay->add_option("--dynamic", ro.dynamic, "Existing dynamic results for the same design")
        ->check(CLI::ExistingFile);

    auto* validate = app.add_subcommand("validate", "Run the built-in oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (validate->parsed()) return print_checks(std::cout, run_oracle_suite()) ? kExitOk : kExitFailure;
        const RunConfig config = resolve_config(global);
        config.validate();
        if (simulate->parsed()) return cmd_simulate(config, sim);
        if (sweep->parsed()) return cmd_sweep(config, sw);
        if (analyze->parsed()) return cmd_analyze(config, an);
        if (fit->parsed()) return cmd_fit(config, fo);
        if (replay->parsed()) return cmd_replay(config, ro);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
