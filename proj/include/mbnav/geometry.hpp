#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mbnav/vec3.hpp"

namespace mbnav {

enum class Branch { Desired, Other };

enum class Region { G1 = 1, G2 = 2, G3 = 3 };

inline constexpr int region_index(Region r) { return static_cast<int>(r) - 1; }
std::string_view to_string(Region r);

/// Planar symmetric Y-bifurcation built from three straight cylinders.
///
/// The main vessel runs along +x from the inlet plane x = 0 to the
/// flow-split plane x = l_main. Both branches start at the split point
/// (l_main, 0, 0); the desired branch opens toward +y. Lengths in metres.
struct BifurcationGeometry {
    double d_main = 0.0;
    double d_branch_desired = 0.0;
    double d_branch_other = 0.0;
    double l_main = 0.0;
    double branch_half_angle = 0.0;  // radians
    double l_branch = 0.0;

    double main_radius() const { return 0.5 * d_main; }
    double branch_radius(Branch b) const {
        return 0.5 * (b == Branch::Desired ? d_branch_desired : d_branch_other);
    }
    Vec3 split_point() const { return {l_main, 0.0, 0.0}; }
    /// Unit axis of a branch, pointing downstream.
    Vec3 branch_axis(Branch b) const;
    /// In-plane unit normal of a branch pointing toward +y.
    Vec3 branch_up_normal(Branch b) const;
    /// Centre of the outlet disc of a branch.
    Vec3 outlet_center(Branch b) const;

    /// Throws std::domain_error unless every dimension is valid.
    void validate() const;
};

/// Explicit dimensions as read from a geometry config file (mm / degrees).
struct GeometryDims {
    double d_main_mm = 0.0;
    std::optional<double> d_branch_mm;        // defaults to Murray's law
    std::optional<double> d_branch_other_mm;  // defaults to d_branch_mm
    double l_main_mm = 0.0;
    double half_angle_deg = 45.0;
    std::optional<double> l_branch_mm;  // defaults to 4 * d_main
};

double murray_branch_diameter(double d_main);

/// Presets "ACA", "MCA", "PCA" (case-insensitive). Throws std::invalid_argument otherwise.
BifurcationGeometry make_geometry(std::string_view preset);
BifurcationGeometry make_geometry(const GeometryDims& dims);

/// Reads key = value lines: d_main_mm, d_branch_mm, d_branch_other_mm,
/// l_main_mm, half_angle_deg, l_branch_mm. A `preset` key loads a preset
/// and lets the other keys override it.
BifurcationGeometry load_geometry_config(const std::filesystem::path& path);

/// Five release points on the inlet plane, ordered top wall → bottom wall.
std::array<Vec3, 5> entrance_positions(const BifurcationGeometry& g, double r_p);

struct TargetPlan {
    int upstream_offset_diams = 0;
    int downstream_offset_diams = 0;
    Vec3 upstream_point;
    Vec3 downstream_point;
    Vec3 final_point;
    // Progress coordinate (see centerline_progress) of the two region boundaries.
    double upstream_station = 0.0;
    double downstream_station = 0.0;
};

TargetPlan place_targets(const BifurcationGeometry& g, double d_p, int upstream_k, int downstream_k);

/// Arc length along the centerline path the point belongs to: the axial
/// coordinate in the main vessel (x <= l_main), and l_main plus the axial
/// coordinate along the branch on the point's side of y = 0 beyond it.
double centerline_progress(const BifurcationGeometry& g, const Vec3& p);

Region classify_region(const BifurcationGeometry& g, const Vec3& p, const TargetPlan& plan);

struct WallQuery {
    double distance = 0.0;  // negative outside the lumen
    Vec3 normal;            // inward unit normal at the nearest wall point
};

/// Interior distance to the vessel wall. The lumen is the union of the main
/// cylinder and the two branch cylinders minus the wedge between the
/// branches' inner walls; the distance is the CSG max/min combination of the
/// exact per-primitive distances, which is continuous and 1-Lipschitz.
WallQuery wall_distance(const BifurcationGeometry& g, const Vec3& p);

/// Which outlet plane (if any) the point has crossed.
std::optional<Branch> outlet_reached(const BifurcationGeometry& g, const Vec3& p);

}  // namespace mbnav
