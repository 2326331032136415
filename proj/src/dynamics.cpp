#include "mbnav/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mbnav/errors.hpp"

namespace mbnav {

MagnetizationCurve::MagnetizationCurve(std::vector<double> field_T, std::vector<double> magnetization_A_per_m)
    : field_(std::move(field_T)), magnetization_(std::move(magnetization_A_per_m)) {
    if (field_.size() != magnetization_.size() || field_.empty())
        throw std::invalid_argument("magnetization curve: need matching, non-empty columns");
    for (std::size_t i = 0; i < field_.size(); ++i) {
        if (magnetization_[i] < 0.0) throw std::invalid_argument("magnetization curve: negative magnetization");
        if (i > 0 && !(field_[i] > field_[i - 1]))
            throw std::invalid_argument("magnetization curve: field values must be strictly increasing");
        if (i > 0 && magnetization_[i] < magnetization_[i - 1])
            throw std::invalid_argument("magnetization curve: magnetization must be non-decreasing");
    }
}

std::shared_ptr<const MagnetizationCurve> MagnetizationCurve::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open magnetization table " + path.string());
    std::vector<double> b, m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double bv, mv;
        if (!(ls >> bv >> mv)) {
            if (b.empty() && lineno == 1) continue;  // header
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 'B,M'");
        }
        b.push_back(bv);
        m.push_back(mv);
    }
    try {
        return std::make_shared<MagnetizationCurve>(std::move(b), std::move(m));
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

double MagnetizationCurve::operator()(double field_T) const {
    const double b = std::abs(field_T);
    if (b <= field_.front()) return magnetization_.front();
    if (b >= field_.back()) return magnetization_.back();
    const auto hi = std::upper_bound(field_.begin(), field_.end(), b) - field_.begin();
    const auto lo = hi - 1;
    const double t = (b - field_[lo]) / (field_[hi] - field_[lo]);
    return magnetization_[lo] + t * (magnetization_[hi] - magnetization_[lo]);
}

double Microrobot::volume() const { return std::numbers::pi * d_p * d_p * d_p / 6.0; }

double Microrobot::magnetization(std::optional<double> field_T) const {
    if (!curve) return m_s;
    if (!field_T) throw ConfigError("lookup-table magnetization requires a field magnitude (field_magnitude_T)");
    return (*curve)(*field_T);
}

void Microrobot::validate() const {
    if (!(d_p > 0.0)) throw std::domain_error("microrobot diameter must be positive");
    if (!(rho_p > 0.0)) throw std::domain_error("microrobot density must be positive");
    if (!curve && !(m_s > 0.0)) throw std::domain_error("microrobot magnetization must be positive");
}

double relaxation_time(const Microrobot& robot, double eta) {
    if (!(eta > 0.0)) throw std::domain_error("relaxation_time: viscosity must be positive");
    return robot.rho_p * robot.d_p * robot.d_p / (18.0 * eta);
}

Vec3 body_acceleration(const Microrobot& robot, const Physics& physics, const Vec3& grad_B, double magnetization) {
    // V_p M / m_p reduces to M / rho_p.
    return physics.gravity * ((robot.rho_p - physics.rho_f) / robot.rho_p) + grad_B * (magnetization / robot.rho_p);
}

Vec3 step_velocity(const Vec3& u_p, const Vec3& u_f, double tau, const Vec3& accel, double dt) {
    const double decay = std::exp(-dt / tau);
    // -tau (e - 1) = -tau expm1(-dt/tau)
    return u_f + decay * (u_p - u_f) - (tau * std::expm1(-dt / tau)) * accel;
}

Vec3 step_position(const Vec3& x, const Vec3& u_p, const Vec3& u_f, double tau, const Vec3& accel, double dt) {
    const double relax = -tau * std::expm1(-dt / tau);  // tau (1 - e^{-dt/tau})
    return x + dt * (u_f + tau * accel) + relax * (u_p - u_f - tau * accel);
}

double time_step(const Vec3& u_p, const Vec3& u_f) {
    const double speed = norm(u_p) + norm(u_f);
    if (!(speed > 0.0)) return kStepLength / 1e-3;
    return kStepLength / speed;
}

ParticleState resolve_collision(const ParticleState& before, const ParticleState& after,
                                const BifurcationGeometry& geometry, double r_p, double cor) {
    if (wall_distance(geometry, after.position).distance >= r_p) return after;

    const Vec3 seg = after.position - before.position;
    const double len = norm(seg);
    double lo = 0.0, hi = 1.0;
    // Bisection on the offset surface to 1e-9 m along the segment; `lo` stays feasible.
    while ((hi - lo) * len > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (wall_distance(geometry, before.position + mid * seg).distance >= r_p) lo = mid;
        else hi = mid;
    }
    ParticleState out = after;
    const Vec3 contact = before.position + lo * seg;
    const Vec3 n = wall_distance(geometry, before.position + hi * seg).normal;
    out.position = contact;
    // Keep the tangential part of the remaining step so a particle pressed
    // against the wall slides instead of sticking.
    const Vec3 rest = after.position - contact;
    const Vec3 slide = contact + (rest - dot(rest, n) * n);
    if (wall_distance(geometry, slide).distance >= r_p) out.position = slide;
    const double un = dot(out.velocity, n);
    if (un < 0.0) out.velocity -= ((1.0 + cor) * un) * n;
    out.collision_count = after.collision_count + 1;
    return out;
}

double settling_velocity(const Microrobot& robot, double fluid_density, double eta, double gravity) {
    return relaxation_time(robot, eta) * gravity * (robot.rho_p - fluid_density) / robot.rho_p;
}

double relaxation_kernel(double x) {
    if (std::abs(x) < 1e-3) {
        // Taylor series of x - 1 + e^-x
        return x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
    }
    return x + std::expm1(-x);
}

}  // namespace mbnav
