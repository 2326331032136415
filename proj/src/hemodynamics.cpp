#include "mbnav/hemodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mbnav/errors.hpp"

namespace mbnav {

void CarreauModel::validate() const {
    if (!(eta_0 > eta_inf) || !(eta_inf > 0.0)) throw std::domain_error("Carreau model requires eta_0 > eta_inf > 0");
    if (!(lambda > 0.0)) throw std::domain_error("Carreau model requires lambda > 0");
    if (!(n > 0.0) || !(n < 1.0)) throw std::domain_error("Carreau model requires 0 < n < 1 (shear thinning)");
}

double apparent_viscosity(const CarreauModel& model, double shear_rate) {
    if (!(shear_rate >= 0.0)) throw std::domain_error("apparent_viscosity: shear rate must be non-negative");
    if (std::isinf(shear_rate)) return model.eta_inf;
    const double lg = model.lambda * shear_rate;
    return model.eta_inf + (model.eta_0 - model.eta_inf) * std::pow(1.0 + lg * lg, 0.5 * (model.n - 1.0));
}

double inlet_profile(double u_max, double r, double R, double n_profile) {
    if (!(R > 0.0)) throw std::domain_error("inlet_profile: radius must be positive");
    if (r < 0.0 || r > R) throw std::domain_error("inlet_profile: radial position outside [0, R]");
    return u_max * (1.0 - std::pow(r / R, (n_profile + 1.0) / n_profile));
}

double profile_flux(double u_max, double R, double n_profile) {
    return u_max * std::numbers::pi * R * R * (n_profile + 1.0) / (3.0 * n_profile + 1.0);
}

// ---------------------------------------------------------------------------
// Analytic composite field
// ---------------------------------------------------------------------------

AnalyticBifurcationFlow::AnalyticBifurcationFlow(const BifurcationGeometry& geometry, double u_max, double n_profile,
                                                 double rho_f)
    : FlowField(rho_f, n_profile), geometry_(geometry), u_main_(u_max) {
    geometry_.validate();
    if (!(u_max >= 0.0)) throw std::domain_error("analytic_bifurcation_flow: u_max must be non-negative");
    if (!(n_profile > 0.0)) throw std::domain_error("analytic_bifurcation_flow: profile exponent must be positive");
    exponent_ = (n_profile + 1.0) / n_profile;
    // Same profile shape everywhere, so equal flux halves fix the branch centreline speed.
    const double r1 = geometry_.main_radius();
    const double rd = geometry_.branch_radius(Branch::Desired);
    const double ro = geometry_.branch_radius(Branch::Other);
    u_desired_ = 0.5 * u_max * r1 * r1 / (rd * rd);
    u_other_ = 0.5 * u_max * r1 * r1 / (ro * ro);
    axis_desired_ = geometry_.branch_axis(Branch::Desired);
    axis_other_ = geometry_.branch_axis(Branch::Other);
}

FlowSample AnalyticBifurcationFlow::sample(const Vec3& p) const {
    const double m = exponent_;
    const double r1 = geometry_.main_radius();

    Vec3 u_main;
    double shear_main = 0.0;
    const double rho = std::hypot(p.y, p.z);
    if (rho < r1) {
        const double q = rho / r1;
        const double qm1 = std::pow(q, m - 1.0);
        u_main = {u_main_ * (1.0 - q * qm1), 0.0, 0.0};
        shear_main = u_main_ * m * qm1 / r1;
    }

    const double x_rel = p.x - geometry_.l_main;
    if (x_rel <= 0.0) return {u_main, shear_main};

    const double w = std::min(1.0, x_rel / blend_length());
    Vec3 u_branch;
    double shear_sq = 0.0;
    const Vec3 rel = p - geometry_.split_point();
    for (Branch b : {Branch::Desired, Branch::Other}) {
        const Vec3& axis = b == Branch::Desired ? axis_desired_ : axis_other_;
        const double s = dot(rel, axis);
        if (s <= 0.0) continue;
        const double rb = geometry_.branch_radius(b);
        const double rho_b = norm(rel - s * axis);
        if (rho_b >= rb) continue;
        // Branch contribution fades in over one branch radius past its start.
        const double fade = std::min(1.0, s / rb);
        const double ub = b == Branch::Desired ? u_desired_ : u_other_;
        const double q = rho_b / rb;
        const double qm1 = std::pow(q, m - 1.0);
        u_branch += (fade * ub * (1.0 - q * qm1)) * axis;
        const double g = fade * ub * m * qm1 / rb;
        shear_sq += g * g;
    }
    return {(1.0 - w) * u_main + w * u_branch, (1.0 - w) * shear_main + w * std::sqrt(shear_sq)};
}

std::shared_ptr<const FlowField> analytic_bifurcation_flow(const BifurcationGeometry& geometry, double u_max,
                                                           double n_profile, double rho_f) {
    return std::make_shared<AnalyticBifurcationFlow>(geometry, u_max, n_profile, rho_f);
}

// ---------------------------------------------------------------------------
// Grid field
// ---------------------------------------------------------------------------

GridField::GridField(std::array<std::size_t, 3> dims, Vec3 origin, Vec3 spacing, std::vector<unsigned char> mask,
                     std::vector<Vec3> velocity, double rho_f, double n_profile)
    : FlowField(rho_f, n_profile),
      dims_(dims),
      origin_(origin),
      spacing_(spacing),
      mask_(std::move(mask)),
      velocity_(std::move(velocity)) {
    for (std::size_t d : dims_)
        if (d < 2) throw std::invalid_argument("GridField: every dimension needs at least two nodes");
    if (!(spacing_.x > 0.0) || !(spacing_.y > 0.0) || !(spacing_.z > 0.0))
        throw std::invalid_argument("GridField: spacing must be positive");
    const std::size_t n = dims_[0] * dims_[1] * dims_[2];
    if (mask_.size() != n || velocity_.size() != n)
        throw std::invalid_argument("GridField: node arrays do not match the grid dimensions");
    if (std::none_of(mask_.begin(), mask_.end(), [](unsigned char m) { return m != 0; }))
        throw std::invalid_argument("GridField: empty fluid mask");
}

Vec3 GridField::interpolate(const Vec3& p) const {
    const double coords[3] = {(p.x - origin_.x) / spacing_.x, (p.y - origin_.y) / spacing_.y,
                              (p.z - origin_.z) / spacing_.z};
    std::size_t cell[3];
    double frac[3];
    constexpr double tol = 1e-9;
    for (int a = 0; a < 3; ++a) {
        const double upper = static_cast<double>(dims_[a] - 1);
        if (coords[a] < -tol || coords[a] > upper + tol) throw std::out_of_range("GridField: query outside grid");
        const double c = std::clamp(coords[a], 0.0, upper);
        const auto i = std::min(static_cast<std::size_t>(c), dims_[a] - 2);
        cell[a] = i;
        frac[a] = c - static_cast<double>(i);
    }
    Vec3 v;
    bool any_fluid = false;
    for (int corner = 0; corner < 8; ++corner) {
        const std::size_t di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
        const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                         (dk ? frac[2] : 1.0 - frac[2]);
        const std::size_t idx = index(cell[0] + di, cell[1] + dj, cell[2] + dk);
        if (!mask_[idx]) continue;
        any_fluid = true;
        v += w * velocity_[idx];
    }
    if (!any_fluid) throw std::out_of_range("GridField: query in a cell without fluid nodes");
    return v;
}

FlowSample GridField::sample(const Vec3& p) const {
    const Vec3 u = interpolate(p);
    auto probe = [&](const Vec3& q) -> std::optional<Vec3> {
        try {
            return interpolate(q);
        } catch (const std::out_of_range&) {
            return std::nullopt;
        }
    };
    // Velocity gradient J[i][j] = d u_i / d x_j.
    double J[3][3] = {};
    const double h[3] = {0.5 * spacing_.x, 0.5 * spacing_.y, 0.5 * spacing_.z};
    for (int j = 0; j < 3; ++j) {
        Vec3 e;
        (j == 0 ? e.x : j == 1 ? e.y : e.z) = h[j];
        const auto fwd = probe(p + e);
        const auto bwd = probe(p - e);
        Vec3 du;
        if (fwd && bwd) du = (*fwd - *bwd) / (2.0 * h[j]);
        else if (fwd) du = (*fwd - u) / h[j];
        else if (bwd) du = (u - *bwd) / h[j];
        J[0][j] = du.x;
        J[1][j] = du.y;
        J[2][j] = du.z;
    }
    double ss = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double s = 0.5 * (J[i][j] + J[j][i]);
            ss += s * s;
        }
    return {u, std::sqrt(2.0 * ss)};
}

void GridField::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    out << "MBNAV-GRID 1\n";
    out << "dims " << dims_[0] << ' ' << dims_[1] << ' ' << dims_[2] << '\n';
    out << "origin " << origin_.x << ' ' << origin_.y << ' ' << origin_.z << '\n';
    out << "spacing " << spacing_.x << ' ' << spacing_.y << ' ' << spacing_.z << '\n';
    out << "units m m/s\n";
    for (std::size_t k = 0; k < dims_[2]; ++k)
        for (std::size_t j = 0; j < dims_[1]; ++j)
            for (std::size_t i = 0; i < dims_[0]; ++i) {
                const std::size_t idx = index(i, j, k);
                const Vec3& v = velocity_[idx];
                out << origin_.x + i * spacing_.x << ' ' << origin_.y + j * spacing_.y << ' '
                    << origin_.z + k * spacing_.z << ' ' << int(mask_[idx] != 0) << ' ' << v.x << ' ' << v.y << ' '
                    << v.z << '\n';
            }
}

std::shared_ptr<const GridField> load_grid_field(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open grid field " + path.string());
    const std::string where = path.string() + ": ";

    // Header lines, skipping '#' comments.
    auto next_line = [&](std::string& line) {
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            return true;
        }
        return false;
    };
    auto expect = [&](const char* keyword) {
        std::string line;
        if (!next_line(line)) throw ParseError(where + "truncated header, expected '" + keyword + "'");
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw != keyword) throw ParseError(where + "expected '" + keyword + "', got '" + kw + "'");
        return ls.str().substr(kw.size());
    };

    {
        std::istringstream magic(expect("MBNAV-GRID"));
        int version = 0;
        if (!(magic >> version) || version != 1) throw ParseError(where + "unsupported grid format version");
    }
    std::array<std::size_t, 3> dims{};
    {
        std::istringstream ls(expect("dims"));
        long long n[3];
        if (!(ls >> n[0] >> n[1] >> n[2]) || n[0] < 2 || n[1] < 2 || n[2] < 2)
            throw ParseError(where + "dims must be three integers >= 2");
        for (int a = 0; a < 3; ++a) dims[a] = static_cast<std::size_t>(n[a]);
    }
    Vec3 origin, spacing;
    {
        std::istringstream ls(expect("origin"));
        if (!(ls >> origin.x >> origin.y >> origin.z)) throw ParseError(where + "bad origin");
    }
    {
        std::istringstream ls(expect("spacing"));
        if (!(ls >> spacing.x >> spacing.y >> spacing.z) || !(spacing.x > 0) || !(spacing.y > 0) || !(spacing.z > 0))
            throw ParseError(where + "bad spacing");
    }
    {
        std::istringstream ls(expect("units"));
        std::string lu, vu;
        if (!(ls >> lu >> vu) || lu != "m" || vu != "m/s")
            throw ParseError(where + "units must be 'm m/s'");
    }

    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<unsigned char> mask(n);
    std::vector<Vec3> vel(n);
    std::size_t idx = 0;
    std::string line;
    while (idx < n && next_line(line)) {
        std::istringstream ls(line);
        Vec3 pos, v;
        int m = 0;
        if (!(ls >> pos.x >> pos.y >> pos.z >> m >> v.x >> v.y >> v.z) || (m != 0 && m != 1))
            throw ParseError(where + "malformed node record " + std::to_string(idx));
        const std::size_t i = idx % dims[0];
        const std::size_t j = (idx / dims[0]) % dims[1];
        const std::size_t k = idx / (dims[0] * dims[1]);
        const Vec3 expected{origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
        const double tol_x = 1e-6 * spacing.x, tol_y = 1e-6 * spacing.y, tol_z = 1e-6 * spacing.z;
        if (std::abs(pos.x - expected.x) > tol_x || std::abs(pos.y - expected.y) > tol_y ||
            std::abs(pos.z - expected.z) > tol_z)
            throw ParseError(where + "non-uniform spacing at node " + std::to_string(idx));
        mask[idx] = static_cast<unsigned char>(m);
        vel[idx] = m ? v : Vec3{};
        ++idx;
    }
    if (idx != n)
        throw ParseError(where + "truncated file: " + std::to_string(idx) + " of " + std::to_string(n) + " nodes");
    if (std::none_of(mask.begin(), mask.end(), [](unsigned char m) { return m != 0; }))
        throw ParseError(where + "empty fluid mask");
    return std::make_shared<GridField>(dims, origin, spacing, std::move(mask), std::move(vel));
}

}  // namespace mbnav
