#include "mbnav/validation.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "mbnav/control.hpp"
#include "mbnav/dynamics.hpp"
#include "mbnav/geometry.hpp"
#include "mbnav/hemodynamics.hpp"

namespace mbnav {

namespace {

CheckResult make_check(std::string name, double error, double tolerance, std::string detail = {}) {
    return {std::move(name), error <= tolerance, error, tolerance, std::move(detail)};
}

CheckResult check_carreau() {
    const CarreauModel m;
    double worst = 0.0;
    // eta_inf + (eta_0 - eta_inf)(1 + (lambda g)^2)^((n-1)/2), evaluated in long double.
    for (double g : {0.0, 1e-3, 0.1, 1.0 / 3.313, 1.0, 10.0, 100.0, 1e3, 1e5}) {
        const long double lg = static_cast<long double>(m.lambda) * g;
        const long double ref = static_cast<long double>(m.eta_inf) +
                                (static_cast<long double>(m.eta_0) - m.eta_inf) *
                                    std::pow(1.0L + lg * lg, (static_cast<long double>(m.n) - 1.0L) / 2.0L);
        worst = std::max(worst, static_cast<double>(std::abs(apparent_viscosity(m, g) - ref)));
    }
    worst = std::max(worst, std::abs(apparent_viscosity(m, 0.0) - m.eta_0));
    return make_check("carreau closed form", worst, 1e-12, "Pa s, 9 shear rates plus the zero-shear limit");
}

CheckResult check_flux() {
    double worst = 0.0;
    for (double R : {0.9e-3, 1.0e-3, 1.2e-3}) {
        for (double u_max : {0.25, 0.45, 0.65}) {
            const double n = kProfileExponent;
            auto integrand = [&](double r) { return 2.0 * std::numbers::pi * r * inlet_profile(u_max, r, R, n); };
            const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, R, 15, 1e-14);
            const double ref = profile_flux(u_max, R, n);
            worst = std::max(worst, std::abs(q - ref) / ref);
        }
    }
    return make_check("inlet profile flux", worst, 1e-9, "relative, adaptive Gauss-Kronrod quadrature");
}

using State = std::array<double, 6>;  // position, velocity

CheckResult check_integrator() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Physics physics;
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        Microrobot robot;
        robot.d_p = std::pow(10.0, -4.3 + 1.3 * (0.5 + 0.5 * uni(rng)));  // 50 um .. 1 mm
        const double eta = 0.00345 + 0.05 * (0.5 + 0.5 * uni(rng));
        const double tau = relaxation_time(robot, eta);
        const Vec3 u_f{0.45 * (0.5 + 0.5 * uni(rng)), 0.1 * uni(rng), 0.05 * uni(rng)};
        const Vec3 u_p = u_f + Vec3{0.2 * uni(rng), 0.2 * uni(rng), 0.2 * uni(rng)};
        const Vec3 grad{2.0 * uni(rng), 2.0 * uni(rng), 2.0 * uni(rng)};
        const Vec3 a = body_acceleration(robot, physics, grad, robot.m_s);
        const Vec3 x0{1e-3 * uni(rng), 1e-4 * uni(rng), 0.0};
        const double dt = time_step(u_p, u_f);

        State s{x0.x, x0.y, x0.z, u_p.x, u_p.y, u_p.z};
        auto rhs = [&](const State& y, State& dy, double) {
            const Vec3 v{y[3], y[4], y[5]};
            const Vec3 acc = (u_f - v) / tau + a;
            dy = {v.x, v.y, v.z, acc.x, acc.y, acc.z};
        };
        boost::numeric::odeint::runge_kutta4<State> stepper;
        boost::numeric::odeint::integrate_n_steps(stepper, rhs, s, 0.0, dt / 1000.0, 1000);

        const Vec3 x1 = step_position(x0, u_p, u_f, tau, a, dt);
        const Vec3 v1 = step_velocity(u_p, u_f, tau, a, dt);
        const Vec3 xr{s[0], s[1], s[2]};
        const Vec3 vr{s[3], s[4], s[5]};
        worst = std::max(worst, norm(x1 - xr) / norm(xr - x0));
        worst = std::max(worst, norm(v1 - vr) / norm(vr));
    }
    return make_check("exact step vs RK4", worst, 1e-6, "relative per step, 1000 RK4 substeps, 40 random states");
}

CheckResult check_settling() {
    Microrobot robot;
    const Physics physics;
    const double eta = 0.00345;
    const double tau = relaxation_time(robot, eta);
    ParticleState s;
    const Vec3 a = body_acceleration(robot, physics, Vec3{}, robot.m_s);
    while (s.time < 30.0 * tau) {
        const double dt = time_step(s.velocity, Vec3{});
        s.position = step_position(s.position, s.velocity, Vec3{}, tau, a, dt);
        s.velocity = step_velocity(s.velocity, Vec3{}, tau, a, dt);
        s.time += dt;
    }
    const double ref = settling_velocity(robot, physics.rho_f, eta);
    const double err = std::abs(std::abs(s.velocity.z) - ref) / ref;
    std::ostringstream d;
    d << "relative, v_t = " << ref << " m/s after 30 tau";
    return make_check("settling velocity", err, 1e-3, d.str());
}

CheckResult check_inverse() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Physics physics;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        Microrobot robot;
        robot.d_p = std::pow(10.0, -4.3 + 1.3 * (0.5 + 0.5 * uni(rng)));
        const double tau = relaxation_time(robot, 0.00345 + 0.05 * (0.5 + 0.5 * uni(rng)));
        ParticleState st;
        st.position = {0.02 * (0.5 + 0.5 * uni(rng)), 1e-3 * uni(rng), 1e-4 * uni(rng)};
        st.velocity = {0.5 * uni(rng), 0.1 * uni(rng), 0.1 * uni(rng)};
        const Vec3 u_f{0.1 + 0.5 * (0.5 + 0.5 * uni(rng)), 0.1 * uni(rng), 0.0};
        const Vec3 target = st.position + Vec3{2e-3 * uni(rng), 1e-3 * uni(rng), 1e-4 * uni(rng)};
        const GradientCommand cmd = required_gradient(st, u_f, tau, robot, physics, robot.m_s, target);
        const double t = norm(target - st.position) / norm(u_f);
        const Vec3 a = body_acceleration(robot, physics, cmd.grad_B, robot.m_s);
        worst = std::max(worst, norm(step_position(st.position, st.velocity, u_f, tau, a, t) - target));
    }
    return make_check("gradient inverse identity", worst, 1e-9, "m, 200 random states and targets");
}

CheckResult check_collision() {
    const BifurcationGeometry g = make_geometry("ACA");
    const double r_p = 0.25e-3;
    double worst = 0.0;
    int resolved = 0;
    for (const Vec3& v : {Vec3{0.0, 0.1, 0.0}, Vec3{0.2, 0.1, 0.0}, Vec3{0.3, 0.05, 0.02}, Vec3{0.1, -0.2, 0.0}}) {
        ParticleState before;
        const double y0 = v.y > 0.0 ? 0.74e-3 : -0.74e-3;
        before.position = {5e-3, y0, 0.0};
        before.velocity = v;
        ParticleState after = before;
        after.position = before.position + v * 5e-4;
        const ParticleState out = resolve_collision(before, after, g, r_p, 1.0);
        if (out.collision_count == 1) ++resolved;
        worst = std::max(worst, std::abs(norm(out.velocity) - norm(v)));
        worst = std::max(worst, r_p - wall_distance(g, out.position).distance - 1e-12 > 0.0 ? 1.0 : 0.0);
    }
    if (resolved != 4) worst = std::max(worst, 1.0);
    return make_check("elastic collision speed", worst, 1e-12, "m/s, 4 wall impacts with COR = 1");
}

CheckResult check_grid_round_trip() {
    // A trilinear field is reproduced exactly by trilinear interpolation.
    auto field = [](const Vec3& p) {
        const double x = p.x * 1e3, y = p.y * 1e3, z = p.z * 1e3;
        return Vec3{0.3 + 0.01 * x - 0.02 * y + 0.005 * x * y * z, 0.05 * y + 0.01 * x * z, -0.02 * z + 0.001 * x * y};
    };
    const std::array<std::size_t, 3> dims{7, 5, 4};
    const Vec3 origin{-1e-3, -1e-3, -0.5e-3};
    const Vec3 spacing{0.5e-3, 0.5e-3, 0.25e-3};
    std::vector<unsigned char> mask(dims[0] * dims[1] * dims[2], 1);
    std::vector<Vec3> vel;
    for (std::size_t k = 0; k < dims[2]; ++k)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t i = 0; i < dims[0]; ++i)
                vel.push_back(field(origin + Vec3{i * spacing.x, j * spacing.y, k * spacing.z}));
    const GridField grid(dims, origin, spacing, mask, vel);

    const auto path = std::filesystem::temp_directory_path() /
                      ("mbnav_oracle_grid_" + std::to_string(::getpid()) + ".txt");
    double worst = 0.0;
    try {
        grid.save(path);
        const auto loaded = load_grid_field(path);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ux(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const Vec3 p = origin + Vec3{ux(rng) * 6 * spacing.x, ux(rng) * 4 * spacing.y, ux(rng) * 3 * spacing.z};
            worst = std::max(worst, norm(loaded->velocity(p) - field(p)));
        }
    } catch (const std::exception& e) {
        std::filesystem::remove(path);
        return {"grid field round trip", false, 1.0, 1e-12, e.what()};
    }
    std::filesystem::remove(path);
    return make_check("grid field round trip", worst, 1e-12, "m/s, save/load then 100 interior samples");
}

}  // namespace

std::vector<CheckResult> run_oracle_suite() {
    return {check_carreau(),   check_flux(),      check_integrator(),     check_settling(),
            check_inverse(),   check_collision(), check_grid_round_trip()};
}

bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.passed;
        out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name << std::right
            << " error=" << std::setprecision(3) << std::scientific << c.error << " tol=" << c.tolerance
            << std::defaultfloat;
        if (!c.detail.empty()) out << "  (" << c.detail << ')';
        out << '\n';
    }
    return ok;
}

}  // namespace mbnav
