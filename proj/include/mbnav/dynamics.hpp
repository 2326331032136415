#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "mbnav/geometry.hpp"
#include "mbnav/vec3.hpp"

namespace mbnav {

inline constexpr double kStandardGravity = 9.81;
inline constexpr double kRobotDensity = 5200.0;
inline constexpr double kSaturationMagnetization = 5e5;

/// Field-dependent magnetization M(|B|), linearly interpolated and clamped at the ends.
class MagnetizationCurve {
public:
    /// Points must have strictly increasing B, non-negative and non-decreasing M.
    MagnetizationCurve(std::vector<double> field_T, std::vector<double> magnetization_A_per_m);

    /// Two-column CSV (B in T, M in A/m); an optional non-numeric header row is skipped.
    static std::shared_ptr<const MagnetizationCurve> load_csv(const std::filesystem::path& path);

    double operator()(double field_T) const;

private:
    std::vector<double> field_;
    std::vector<double> magnetization_;
};

/// Spherical magnetic microrobot.
struct Microrobot {
    double d_p = 500e-6;
    double rho_p = kRobotDensity;
    double m_s = kSaturationMagnetization;
    std::shared_ptr<const MagnetizationCurve> curve;  // null: constant magnetization m_s

    double radius() const { return 0.5 * d_p; }
    double volume() const;
    double mass() const { return rho_p * volume(); }
    /// Active magnetization; lookup-table robots need the field magnitude (ConfigError otherwise).
    double magnetization(std::optional<double> field_T) const;
    void validate() const;
};

/// Body forces shared by every step of a trajectory.
struct Physics {
    Vec3 gravity{0.0, 0.0, -kStandardGravity};
    double rho_f = 1060.0;
};

struct ParticleState {
    Vec3 position;
    Vec3 velocity;
    double time = 0.0;
    int collision_count = 0;
};

/// Stokes relaxation time rho_p d_p^2 / (18 eta).
double relaxation_time(const Microrobot& robot, double eta);

/// Non-drag acceleration g (rho_p - rho_f)/rho_p + V_p gradB M / m_p.
Vec3 body_acceleration(const Microrobot& robot, const Physics& physics, const Vec3& grad_B, double magnetization);

/// Exact velocity update for frozen fluid velocity and forcing over dt.
Vec3 step_velocity(const Vec3& u_p, const Vec3& u_f, double tau, const Vec3& accel, double dt);

/// Exact position update, the time integral of step_velocity.
Vec3 step_position(const Vec3& x, const Vec3& u_p, const Vec3& u_f, double tau, const Vec3& accel, double dt);

inline constexpr double kStepLength = 1e-5;  // m of combined particle+fluid travel per step

/// dt = 10 um / (|u_p| + |u_f|); falls back to 10 um at 1 mm/s when both are still.
double time_step(const Vec3& u_p, const Vec3& u_f);

/// Moves `after` back to where the segment before→after meets the surface
/// wall_distance = r_p (plus the tangential remainder of the step when that
/// stays feasible), reflects the wall-normal velocity scaled by `cor` and
/// counts the collision. Returns `after` unchanged when no wall is crossed.
ParticleState resolve_collision(const ParticleState& before, const ParticleState& after,
                                const BifurcationGeometry& geometry, double r_p, double cor);

/// Terminal velocity in still fluid without magnetic forcing.
double settling_velocity(const Microrobot& robot, double fluid_density, double eta,
                         double gravity = kStandardGravity);

/// (x - 1 + e^-x), accurate for small x.
double relaxation_kernel(double x);

}  // namespace mbnav
