#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "mbnav/dynamics.hpp"
#include "mbnav/geometry.hpp"
#include "mbnav/hemodynamics.hpp"
#include "mbnav/vec3.hpp"

namespace mbnav {

/// Magnetic gradient with its magnitude and direction angles.
struct GradientCommand {
    Vec3 grad_B;             // T/m
    double magnitude = 0.0;  // T/m
    double azimuthal = 0.0;  // rad, direction in the XY plane measured from +x
    double polar = 0.0;      // rad, measured from +z (pi/2 = in-plane)

    static GradientCommand from_vector(const Vec3& g);
};

/// Recompute the required gradient every step from the current state.
struct DynamicMode {};

/// Fixed lateral gradient per region, pointing toward the desired branch (+y, in-plane).
struct ConstantMode {
    std::array<double, 3> g{0.0, 0.0, 0.0};  // G1, G2, G3 in T/m
    bool gravity_compensation = true;
};

using ControllerMode = std::variant<DynamicMode, ConstantMode>;

/// Which viscosity the relaxation time is evaluated with.
enum class TauViscosity { LocalCarreau, EtaInf, Eta0 };

struct SimulationSettings {
    Physics physics;
    CarreauModel carreau;
    TauViscosity tau_viscosity = TauViscosity::LocalCarreau;
    double cor = 1.0;
    std::optional<double> gradient_cap;     // T/m; none = uncapped
    std::optional<double> field_magnitude;  // T; required by lookup-table magnetization
    std::size_t max_steps = 1'000'000;
    bool record_path = false;
};

/// F = V_p M grad_B with M = M_s or M(|B|).
Vec3 magnetic_force(const Microrobot& robot, const Vec3& grad_B, std::optional<double> field_magnitude = std::nullopt);

/// Gradient that makes the exact step update land on `target` after the
/// estimated time of flight |d| / |u_f|, under frozen fluid velocity.
/// `fallback_speed` replaces |u_f| when the fluid is at rest.
GradientCommand required_gradient(const ParticleState& state, const Vec3& u_f, double tau, const Microrobot& robot,
                                  const Physics& physics, double magnetization, const Vec3& target,
                                  double fallback_speed = 1e-3);

/// Gradient that holds a particle still against gravity and buoyancy.
Vec3 gravity_hold_gradient(const Microrobot& robot, const Physics& physics, double magnetization);

Vec3 next_waypoint(Region region, const TargetPlan& plan);

GradientCommand constant_gradient(Region region, const ConstantMode& mode, const Microrobot& robot,
                                  const Physics& physics, double magnetization);

enum class Outcome { Desired, Other, Stalled };
std::string_view to_string(Outcome o);

struct PathPoint {
    double t;
    Vec3 position;
    Vec3 velocity;
    Vec3 grad_B;
    Region region;
    bool collision;
};

struct TrajectoryRecord {
    Outcome outcome = Outcome::Stalled;
    int collisions = 0;
    std::size_t steps = 0;
    double transit_time = 0.0;
    /// Per-region step samples of |grad_B| (T/m) and azimuthal angle (rad).
    std::array<std::vector<double>, 3> magnitude;
    std::array<std::vector<double>, 3> azimuth;
    /// Smallest wall_distance - r_p over all recorded positions.
    double min_clearance = 0.0;
    /// Largest single-step displacement (m).
    double max_step = 0.0;
    std::vector<PathPoint> path;  // filled when settings.record_path
};

/// Integrates one microrobot from `start` until it leaves through a branch
/// outlet or the step cap is hit.
TrajectoryRecord run_trajectory(const Microrobot& robot, const Vec3& start, const TargetPlan& plan,
                                const BifurcationGeometry& geometry, const FlowField& flow,
                                const ControllerMode& mode, const SimulationSettings& settings);

}  // namespace mbnav
