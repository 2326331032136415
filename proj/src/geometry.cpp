#include "mbnav/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mbnav/errors.hpp"
#include "mbnav/keyvalue.hpp"

namespace mbnav {

namespace {

constexpr double kMm = 1e-3;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct Primitive {
    double distance;
    Vec3 normal;
};

Primitive max_of(const Primitive& a, const Primitive& b) { return b.distance > a.distance ? b : a; }
Primitive min_of(const Primitive& a, const Primitive& b) { return b.distance < a.distance ? b : a; }

Primitive main_cylinder(const BifurcationGeometry& g, const Vec3& p) {
    const double rho = std::hypot(p.y, p.z);
    if (rho < 1e-300) return {g.main_radius(), {0.0, -1.0, 0.0}};  // nearest wall taken on the +y side
    return {g.main_radius() - rho, Vec3{0.0, -p.y / rho, -p.z / rho}};
}

Primitive branch_cylinder(const BifurcationGeometry& g, Branch b, const Vec3& p) {
    const Vec3 rel = p - g.split_point();
    const Vec3 axis = g.branch_axis(b);
    const double s = dot(rel, axis);
    const Vec3 perp = rel - s * axis;
    const double rho = norm(perp);
    Primitive lateral{g.branch_radius(b) - rho,
                      rho < 1e-300 ? -g.branch_up_normal(b) : -perp / rho};
    // The start cap lies inside the main vessel; it only clips the backward extension.
    const Primitive cap{s, axis};
    return min_of(lateral, cap);
}

/// Exterior distance to the apex wedge bounded by both branches' inner walls.
Primitive apex_wedge(const BifurcationGeometry& g, const Vec3& p) {
    const double sn = std::sin(g.branch_half_angle);
    const double cs = std::cos(g.branch_half_angle);
    const Vec3 rel = p - g.split_point();
    const Vec3 inner_d{sn, -cs, 0.0};
    const Vec3 inner_o{sn, cs, 0.0};
    const double rd = g.branch_radius(Branch::Desired);
    const double ro = g.branch_radius(Branch::Other);
    const double hd = rd - dot(rel, inner_d);
    const double ho = ro - dot(rel, inner_o);
    if (hd <= 0.0 && ho <= 0.0) {
        return hd > ho ? Primitive{hd, -inner_d} : Primitive{ho, -inner_o};
    }
    const double tip_x = (rd + ro) / (2.0 * sn);
    const double tip_y = (ro - rd) / (2.0 * cs);
    const double vx = rel.x - tip_x;
    const double vy = rel.y - tip_y;
    const double tip_dist = std::hypot(vx, vy);
    Primitive best{tip_dist, tip_dist > 0.0 ? Vec3{vx / tip_dist, vy / tip_dist, 0.0} : Vec3{-1.0, 0.0, 0.0}};
    if (hd > 0.0) {
        const Vec3 q = rel + hd * inner_d;
        if (ro - dot(q, inner_o) <= 0.0 && hd < best.distance) best = {hd, -inner_d};
    }
    if (ho > 0.0) {
        const Vec3 q = rel + ho * inner_o;
        if (rd - dot(q, inner_d) <= 0.0 && ho < best.distance) best = {ho, -inner_o};
    }
    return best;
}

}  // namespace

std::string_view to_string(Region r) {
    switch (r) {
        case Region::G1: return "G1";
        case Region::G2: return "G2";
        case Region::G3: return "G3";
    }
    return "?";
}

Vec3 BifurcationGeometry::branch_axis(Branch b) const {
    const double sign = b == Branch::Desired ? 1.0 : -1.0;
    return {std::cos(branch_half_angle), sign * std::sin(branch_half_angle), 0.0};
}

Vec3 BifurcationGeometry::branch_up_normal(Branch b) const {
    const double sign = b == Branch::Desired ? -1.0 : 1.0;
    return {sign * std::sin(branch_half_angle), std::cos(branch_half_angle), 0.0};
}

Vec3 BifurcationGeometry::outlet_center(Branch b) const { return split_point() + l_branch * branch_axis(b); }

void BifurcationGeometry::validate() const {
    if (!(d_main > 0.0) || !(d_branch_desired > 0.0) || !(d_branch_other > 0.0) || !(l_main > 0.0) ||
        !(l_branch > 0.0))
        throw std::domain_error("geometry: all lengths must be strictly positive");
    if (!(branch_half_angle > 0.0) || !(branch_half_angle < 0.5 * std::numbers::pi))
        throw std::domain_error("geometry: branch half-angle must lie in (0, 90) degrees");
}

double murray_branch_diameter(double d_main) {
    if (!(d_main > 0.0)) throw std::domain_error("murray_branch_diameter: diameter must be positive");
    return d_main * std::pow(2.0, -1.0 / 3.0);
}

BifurcationGeometry make_geometry(std::string_view preset) {
    std::string name(preset);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    GeometryDims dims;
    if (name == "ACA") {
        dims.d_main_mm = 2.00;
        dims.d_branch_mm = 1.59;
        dims.l_main_mm = 20.0;
    } else if (name == "MCA") {
        dims.d_main_mm = 2.40;
        dims.d_branch_mm = 1.90;
        dims.l_main_mm = 30.0;
    } else if (name == "PCA") {
        dims.d_main_mm = 1.80;
        dims.d_branch_mm = 1.27;  // tabulated value, not Murray's 1.43 mm
        dims.l_main_mm = 10.0;
    } else {
        throw std::invalid_argument("unknown artery preset '" + std::string(preset) + "' (expected ACA, MCA or PCA)");
    }
    return make_geometry(dims);
}

BifurcationGeometry make_geometry(const GeometryDims& dims) {
    BifurcationGeometry g;
    g.d_main = dims.d_main_mm * kMm;
    g.d_branch_desired = dims.d_branch_mm ? *dims.d_branch_mm * kMm : murray_branch_diameter(g.d_main);
    g.d_branch_other = dims.d_branch_other_mm ? *dims.d_branch_other_mm * kMm : g.d_branch_desired;
    g.l_main = dims.l_main_mm * kMm;
    g.branch_half_angle = deg2rad(dims.half_angle_deg);
    g.l_branch = dims.l_branch_mm ? *dims.l_branch_mm * kMm : 4.0 * g.d_main;
    g.validate();
    return g;
}

BifurcationGeometry load_geometry_config(const std::filesystem::path& path) {
    const auto kv = KeyValueFile::load(path);
    GeometryDims dims;
    if (const auto preset = kv.get("preset")) {
        const auto g = make_geometry(*preset);
        dims.d_main_mm = g.d_main / kMm;
        dims.d_branch_mm = g.d_branch_desired / kMm;
        dims.d_branch_other_mm = g.d_branch_other / kMm;
        dims.l_main_mm = g.l_main / kMm;
    }
    if (auto v = kv.get_double("d_main_mm")) dims.d_main_mm = *v;
    if (auto v = kv.get_double("d_branch_mm")) dims.d_branch_mm = *v;
    if (auto v = kv.get_double("d_branch_other_mm")) dims.d_branch_other_mm = *v;
    if (auto v = kv.get_double("l_main_mm")) dims.l_main_mm = *v;
    if (auto v = kv.get_double("half_angle_deg")) dims.half_angle_deg = *v;
    if (auto v = kv.get_double("l_branch_mm")) dims.l_branch_mm = *v;
    for (const auto& [key, _] : kv.values()) {
        static const char* known[] = {"preset", "d_main_mm", "d_branch_mm", "d_branch_other_mm",
                                      "l_main_mm", "half_angle_deg", "l_branch_mm"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ParseError(path.string() + ": unknown geometry key '" + key + "'");
    }
    if (dims.d_main_mm <= 0.0 || dims.l_main_mm <= 0.0)
        throw ParseError(path.string() + ": d_main_mm and l_main_mm (or preset) are required");
    return make_geometry(dims);
}

std::array<Vec3, 5> entrance_positions(const BifurcationGeometry& g, double r_p) {
    const double R = g.main_radius();
    if (!(r_p >= 0.0) || r_p >= R)
        throw std::domain_error("entrance_positions: microrobot radius must be smaller than the vessel radius");
    const double off = R - r_p;
    return {Vec3{0.0, off, 0.0}, Vec3{0.0, 0.5 * off, 0.0}, Vec3{0.0, 0.0, 0.0}, Vec3{0.0, -0.5 * off, 0.0},
            Vec3{0.0, -off, 0.0}};
}

TargetPlan place_targets(const BifurcationGeometry& g, double d_p, int upstream_k, int downstream_k) {
    if (upstream_k < 1 || upstream_k > 4 || downstream_k < 1 || downstream_k > 4)
        throw std::invalid_argument("place_targets: target offsets must be 1..4 microrobot diameters");
    if (!(d_p > 0.0)) throw std::domain_error("place_targets: diameter must be positive");
    const double r_p = 0.5 * d_p;
    const double r_branch = g.branch_radius(Branch::Desired);
    if (g.l_main - 4.0 * d_p <= 0.0)
        throw std::domain_error("place_targets: main vessel shorter than four microrobot diameters");
    if (r_p >= g.main_radius() || r_p >= r_branch)
        throw std::domain_error("place_targets: microrobot does not fit in the vessel");

    TargetPlan plan;
    plan.upstream_offset_diams = upstream_k;
    plan.downstream_offset_diams = downstream_k;
    plan.upstream_point = {g.l_main - upstream_k * d_p, 0.5 * (g.main_radius() - r_p), 0.0};
    plan.downstream_point =
        g.split_point() + downstream_k * d_p * g.branch_axis(Branch::Desired) + Vec3{0.0, 0.5 * (r_branch - r_p), 0.0};
    plan.final_point = g.outlet_center(Branch::Desired);
    plan.upstream_station = centerline_progress(g, plan.upstream_point);
    plan.downstream_station = centerline_progress(g, plan.downstream_point);

    for (const Vec3& t : {plan.upstream_point, plan.downstream_point}) {
        if (wall_distance(g, t).distance < r_p)
            throw std::domain_error("place_targets: intermediate target falls outside the vessel interior");
    }
    return plan;
}

double centerline_progress(const BifurcationGeometry& g, const Vec3& p) {
    if (p.x <= g.l_main) return p.x;
    const Branch side = p.y >= 0.0 ? Branch::Desired : Branch::Other;
    return g.l_main + dot(p - g.split_point(), g.branch_axis(side));
}

Region classify_region(const BifurcationGeometry& g, const Vec3& p, const TargetPlan& plan) {
    const double xi = centerline_progress(g, p);
    if (xi < plan.upstream_station) return Region::G1;
    if (xi < plan.downstream_station) return Region::G2;
    return Region::G3;
}

WallQuery wall_distance(const BifurcationGeometry& g, const Vec3& p) {
    Primitive lumen = main_cylinder(g, p);
    lumen = max_of(lumen, branch_cylinder(g, Branch::Desired, p));
    lumen = max_of(lumen, branch_cylinder(g, Branch::Other, p));
    const Primitive result = min_of(lumen, apex_wedge(g, p));
    return {result.distance, result.normal};
}

std::optional<Branch> outlet_reached(const BifurcationGeometry& g, const Vec3& p) {
    if (p.x <= g.l_main) return std::nullopt;
    for (Branch b : {Branch::Desired, Branch::Other}) {
        const Vec3 rel = p - g.split_point();
        const double s = dot(rel, g.branch_axis(b));
        if (s < g.l_branch) continue;
        const Vec3 perp = rel - s * g.branch_axis(b);
        if (norm(perp) <= 2.0 * g.branch_radius(b)) return b;
    }
    return std::nullopt;
}

}  // namespace mbnav
