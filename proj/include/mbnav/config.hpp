#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "mbnav/control.hpp"
#include "mbnav/keyvalue.hpp"
#include "mbnav/sweep.hpp"

namespace mbnav {

/// Everything a CLI command needs. Defaults reproduce the table2 reference
/// case: 500 um robot, ACA, 0.45 m/s, centre entrance, -2D/+2D targets,
/// dynamic control with gravity on.
struct RunConfig {
    // Geometry: a preset name, or a geometry key-value file when set.
    std::string artery = "ACA";
    std::optional<std::filesystem::path> geometry_file;
    double vessel_offset_mm = 0.0;

    // Flow: "analytic" or "grid:<path>".
    std::string flow = "analytic";
    double u_max = 0.45;  // m/s
    double rho_f = 1060.0;
    double profile_n = 0.89;
    CarreauModel carreau;

    // Microrobot.
    double d_um = 500.0;
    double rho_p = kRobotDensity;
    double m_s = kSaturationMagnetization;
    std::optional<std::filesystem::path> magnetization_table;
    std::optional<double> field_magnitude_T;

    // Scenario.
    int entrance = 3;
    int upstream_k = 2;
    int downstream_k = 2;

    // Controller and integrator.
    std::string mode = "dynamic";  // dynamic | constant
    std::array<double, 3> g{0.0, 0.0, 0.0};
    bool gravity_compensation = true;
    bool gravity = true;
    double cor = 1.0;
    TauViscosity tau_viscosity = TauViscosity::LocalCarreau;
    std::optional<double> gradient_cap;
    std::size_t max_steps = 1'000'000;

    // Output.
    std::filesystem::path out_dir = ".";
    unsigned workers = 1;

    ScenarioSpec scenario() const;
    /// Throws ConfigError with the offending key on inconsistent settings.
    void validate() const;
};

/// Applies every key of `kv` on top of `base`. Unknown keys and malformed
/// values throw ConfigError.
RunConfig apply_config(RunConfig base, const KeyValueFile& kv);
RunConfig load_run_config(const std::filesystem::path& path);

/// Sweep setup honouring the config's geometry, flow, robot and controller
/// settings. Scenario factors still come from each ScenarioSpec.
SweepSetup make_setup(const RunConfig& config);

}  // namespace mbnav
