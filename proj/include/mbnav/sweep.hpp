#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mbnav/control.hpp"
#include "mbnav/geometry.hpp"
#include "mbnav/hemodynamics.hpp"

namespace mbnav {

/// One cell of a factorial design.
struct ScenarioSpec {
    double d_p = 0.0;             // m
    std::string artery;           // preset name
    double vessel_offset = 0.0;   // m added to every preset diameter (the table4 design uses 0.2 mm)
    double u_max = 0.0;           // m/s
    int entrance = 3;             // 1 = top wall ... 5 = bottom wall
    int upstream_k = 2;
    int downstream_k = 2;

    bool operator==(const ScenarioSpec&) const = default;
};

/// Level sets of a full factorial design.
struct DesignLevels {
    std::vector<double> diameters;   // m
    std::vector<std::string> arteries;
    std::vector<double> velocities;  // m/s
    std::vector<int> entrances;
    std::vector<int> upstream_k;
    std::vector<int> downstream_k;
    double vessel_offset = 0.0;      // m

    std::size_t size() const;
};

DesignLevels table2_levels();
DesignLevels table4_levels();

/// Reads a custom design from a key-value file. Keys: diameters_um,
/// arteries, velocities, entrances, upstream_k, downstream_k (comma lists)
/// and optional vessel_offset_mm. Missing keys take the table2 levels.
DesignLevels load_design(const std::filesystem::path& path);

/// Cartesian product in lexicographic order: diameter, artery, velocity,
/// entrance, upstream_k, downstream_k (last factor fastest).
std::vector<ScenarioSpec> factorial_grid(const DesignLevels& levels);

/// Summary of the gradient samples recorded in one region.
struct RegionSummary {
    std::size_t samples = 0;
    double mean = 0.0;     // T/m
    double median = 0.0;   // T/m
    double max = 0.0;      // T/m
    double azimuth = 0.0;  // rad, circular mean of the commanded in-plane direction
};

struct ScenarioResult {
    ScenarioSpec spec;
    Outcome outcome = Outcome::Stalled;
    int collisions = 0;
    std::size_t steps = 0;
    double transit_time = 0.0;   // s
    double min_clearance = 0.0;  // m
    std::array<RegionSummary, 3> regions;
    std::string error;           // set when the scenario could not be run
};

RegionSummary summarize_region(const std::vector<double>& magnitude, const std::vector<double>& azimuth);

/// Everything except the scenario itself that a run needs.
struct SweepSetup {
    std::function<BifurcationGeometry(const ScenarioSpec&)> geometry;
    std::function<std::shared_ptr<const FlowField>(const BifurcationGeometry&, const ScenarioSpec&)> flow;
    std::function<ControllerMode(const ScenarioSpec&)> mode;
    SimulationSettings settings;
    Microrobot robot;  // d_p is overwritten per scenario
};

/// Preset geometry widened by spec.vessel_offset, analytic flow, dynamic control.
SweepSetup default_setup();

BifurcationGeometry scenario_geometry(const ScenarioSpec& spec);

ScenarioResult run_scenario(const ScenarioSpec& spec, const SweepSetup& setup);

/// Runs every scenario on `workers` threads. Results come back in grid order
/// and do not depend on the worker count. Failed scenarios are recorded as
/// stalled with the error text.
std::vector<ScenarioResult> run_sweep(const std::vector<ScenarioSpec>& grid, const SweepSetup& setup,
                                      unsigned workers = 1);

/// count(desired) / count(all); throws std::invalid_argument on empty input.
double navigation_success(const std::vector<ScenarioResult>& results);

void write_results_csv(std::ostream& out, const std::vector<ScenarioResult>& results);
void save_results_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& results);
std::vector<ScenarioResult> read_results_csv(std::istream& in, const std::string& origin = "<stream>");
std::vector<ScenarioResult> load_results_csv(const std::filesystem::path& path);

}  // namespace mbnav
