#include "mbnav/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mbnav {

GradientCommand GradientCommand::from_vector(const Vec3& g) {
    GradientCommand c;
    c.grad_B = g;
    c.magnitude = norm(g);
    c.azimuthal = (g.x == 0.0 && g.y == 0.0) ? 0.0 : std::atan2(g.y, g.x);
    c.polar = c.magnitude > 0.0 ? std::acos(std::clamp(g.z / c.magnitude, -1.0, 1.0)) : 0.5 * std::numbers::pi;
    return c;
}

Vec3 magnetic_force(const Microrobot& robot, const Vec3& grad_B, std::optional<double> field_magnitude) {
    return grad_B * (robot.volume() * robot.magnetization(field_magnitude));
}

GradientCommand required_gradient(const ParticleState& state, const Vec3& u_f, double tau, const Microrobot& robot,
                                  const Physics& physics, double magnetization, const Vec3& target,
                                  double fallback_speed) {
    if (!(tau > 0.0)) throw std::domain_error("required_gradient: relaxation time must be positive");
    const Vec3 d = target - state.position;
    const double dist = norm(d);
    if (dist == 0.0) throw std::domain_error("required_gradient: target coincides with the current position");
    double speed = norm(u_f);
    if (!(speed > 0.0)) speed = fallback_speed > 0.0 ? fallback_speed : 1e-3;
    const double t = dist / speed;
    const double x = t / tau;

    // d = t u_f + tau(1 - e^{-x})(u_p - u_f) + tau^2 (x - 1 + e^{-x}) A, solved for A.
    const Vec3 unforced = t * u_f - (tau * std::expm1(-x)) * (state.velocity - u_f);
    const Vec3 accel = (d - unforced) / (tau * tau * relaxation_kernel(x));
    const Vec3 gravity_part = physics.gravity * ((robot.rho_p - physics.rho_f) / robot.rho_p);
    return GradientCommand::from_vector((accel - gravity_part) * (robot.rho_p / magnetization));
}

Vec3 gravity_hold_gradient(const Microrobot& robot, const Physics& physics, double magnetization) {
    return physics.gravity * (-(robot.rho_p - physics.rho_f) / magnetization);
}

Vec3 next_waypoint(Region region, const TargetPlan& plan) {
    switch (region) {
        case Region::G1: return plan.upstream_point;
        case Region::G2: return plan.downstream_point;
        case Region::G3: return plan.final_point;
    }
    return plan.final_point;
}

GradientCommand constant_gradient(Region region, const ConstantMode& mode, const Microrobot& robot,
                                  const Physics& physics, double magnetization) {
    Vec3 g{0.0, mode.g[region_index(region)], 0.0};
    if (mode.gravity_compensation) {
        const Vec3 hold = gravity_hold_gradient(robot, physics, magnetization);
        g.z += hold.z;
    }
    return GradientCommand::from_vector(g);
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Desired: return "desired";
        case Outcome::Other: return "other";
        case Outcome::Stalled: return "stalled";
    }
    return "?";
}

namespace {

double tau_viscosity(const SimulationSettings& s, double shear_rate) {
    switch (s.tau_viscosity) {
        case TauViscosity::LocalCarreau: return apparent_viscosity(s.carreau, shear_rate);
        case TauViscosity::EtaInf: return s.carreau.eta_inf;
        case TauViscosity::Eta0: return s.carreau.eta_0;
    }
    return s.carreau.eta_inf;
}

}  // namespace

TrajectoryRecord run_trajectory(const Microrobot& robot, const Vec3& start, const TargetPlan& plan,
                                const BifurcationGeometry& geometry, const FlowField& flow,
                                const ControllerMode& mode, const SimulationSettings& settings) {
    robot.validate();
    const double r_p = robot.radius();
    const double magnetization = robot.magnetization(settings.field_magnitude);
    const Physics& physics = settings.physics;

    TrajectoryRecord rec;
    ParticleState state;
    state.position = start;
    rec.min_clearance = wall_distance(geometry, start).distance - r_p;

    Region region = Region::G1;
    try {
        state.velocity = flow.velocity(start);  // released with the local blood velocity
        for (std::size_t step = 0; step < settings.max_steps; ++step) {
            const FlowSample fs = flow.sample(state.position);
            const double tau = relaxation_time(robot, tau_viscosity(settings, fs.shear_rate));
            const double dt = time_step(state.velocity, fs.velocity);

            // Regions only advance, so waypoints are never revisited.
            region = std::max(region, classify_region(geometry, state.position, plan));

            GradientCommand cmd;
            if (std::holds_alternative<DynamicMode>(mode)) {
                const Vec3 target = next_waypoint(region, plan);
                if (norm(target - state.position) > 0.0) {
                    const double fallback = norm(state.velocity) > 0.0 ? norm(state.velocity) : 1e-3;
                    cmd = required_gradient(state, fs.velocity, tau, robot, physics, magnetization, target, fallback);
                } else {
                    cmd = GradientCommand::from_vector(gravity_hold_gradient(robot, physics, magnetization));
                }
            } else {
                cmd = constant_gradient(region, std::get<ConstantMode>(mode), robot, physics, magnetization);
            }
            if (settings.gradient_cap && cmd.magnitude > *settings.gradient_cap)
                cmd = GradientCommand::from_vector(cmd.grad_B * (*settings.gradient_cap / cmd.magnitude));

            const Vec3 accel = body_acceleration(robot, physics, cmd.grad_B, magnetization);
            ParticleState next = state;
            next.position = step_position(state.position, state.velocity, fs.velocity, tau, accel, dt);
            next.velocity = step_velocity(state.velocity, fs.velocity, tau, accel, dt);
            next.time = state.time + dt;
            next = resolve_collision(state, next, geometry, r_p, settings.cor);
            const bool collided = next.collision_count != state.collision_count;

            const int ri = region_index(region);
            rec.magnitude[ri].push_back(cmd.magnitude);
            rec.azimuth[ri].push_back(cmd.azimuthal);
            rec.max_step = std::max(rec.max_step, norm(next.position - state.position));
            rec.min_clearance = std::min(rec.min_clearance, wall_distance(geometry, next.position).distance - r_p);
            if (settings.record_path)
                rec.path.push_back({state.time, state.position, state.velocity, cmd.grad_B, region, collided});

            state = next;
            rec.steps = step + 1;
            if (const auto out = outlet_reached(geometry, state.position)) {
                rec.outcome = *out == Branch::Desired ? Outcome::Desired : Outcome::Other;
                break;
            }
        }
    } catch (const std::out_of_range&) {
        // Left the sampled flow domain (grid fields); reported as a stall.
        rec.outcome = Outcome::Stalled;
    }
    rec.collisions = state.collision_count;
    rec.transit_time = state.time;
    if (settings.record_path)
        rec.path.push_back({state.time, state.position, state.velocity, Vec3{}, region, false});
    return rec;
}

}  // namespace mbnav
