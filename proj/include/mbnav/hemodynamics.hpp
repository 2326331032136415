#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "mbnav/geometry.hpp"
#include "mbnav/vec3.hpp"

namespace mbnav {

/// Shear-thinning blood viscosity, eta = eta_inf + (eta_0 - eta_inf) [1 + (lambda g)^2]^((n-1)/2).
struct CarreauModel {
    double eta_0 = 0.056;     // Pa s
    double eta_inf = 0.00345; // Pa s
    double lambda = 3.313;    // s
    double n = 0.3568;

    void validate() const;
};

double apparent_viscosity(const CarreauModel& model, double shear_rate);

/// Fully developed inlet profile u = u_max [1 - (r/R)^((n+1)/n)].
double inlet_profile(double u_max, double r, double R, double n_profile);

/// Closed-form volumetric flux of the inlet profile over a disc of radius R.
double profile_flux(double u_max, double R, double n_profile);

struct FlowSample {
    Vec3 velocity;
    double shear_rate = 0.0;
};

/// Steady velocity field over the bifurcation. Implementations are
/// immutable after construction and safe for concurrent queries.
class FlowField {
public:
    virtual ~FlowField() = default;

    virtual FlowSample sample(const Vec3& p) const = 0;
    Vec3 velocity(const Vec3& p) const { return sample(p).velocity; }
    double shear_rate(const Vec3& p) const { return sample(p).shear_rate; }

    double fluid_density() const { return rho_f_; }
    double profile_exponent() const { return n_profile_; }

protected:
    FlowField(double rho_f, double n_profile) : rho_f_(rho_f), n_profile_(n_profile) {}

private:
    double rho_f_;
    double n_profile_;
};

inline constexpr double kBloodDensity = 1060.0;
inline constexpr double kProfileExponent = 0.89;

/// Analytic composite field: the inlet profile along the main vessel, the
/// same profile shape about each branch axis with the branch centreline
/// speed fixed by a 50/50 flux split, and a linear blend between the two
/// over one main diameter downstream of the split plane.
class AnalyticBifurcationFlow final : public FlowField {
public:
    AnalyticBifurcationFlow(const BifurcationGeometry& geometry, double u_max, double n_profile = kProfileExponent,
                            double rho_f = kBloodDensity);

    FlowSample sample(const Vec3& p) const override;

    double main_centerline_speed() const { return u_main_; }
    double branch_centerline_speed(Branch b) const { return b == Branch::Desired ? u_desired_ : u_other_; }
    const BifurcationGeometry& geometry() const { return geometry_; }
    /// Axial extent of the blend zone past the split plane.
    double blend_length() const { return geometry_.d_main; }

private:
    BifurcationGeometry geometry_;
    double u_main_;
    double u_desired_;
    double u_other_;
    double exponent_;  // (n+1)/n
    Vec3 axis_desired_;
    Vec3 axis_other_;
};

std::shared_ptr<const FlowField> analytic_bifurcation_flow(const BifurcationGeometry& geometry, double u_max,
                                                           double n_profile = kProfileExponent,
                                                           double rho_f = kBloodDensity);

/// Structured-grid velocity field with a fluid mask.
///
/// Velocity is trilinear inside the grid; masked-out nodes act as no-slip
/// (zero velocity). Queries outside the grid box, or in a cell with no
/// fluid node, throw std::out_of_range. Shear rate is sqrt(2 S:S) of the
/// strain-rate tensor from central differences of the interpolated field.
class GridField final : public FlowField {
public:
    GridField(std::array<std::size_t, 3> dims, Vec3 origin, Vec3 spacing, std::vector<unsigned char> mask,
              std::vector<Vec3> velocity, double rho_f = kBloodDensity, double n_profile = kProfileExponent);

    FlowSample sample(const Vec3& p) const override;

    std::array<std::size_t, 3> dims() const { return dims_; }
    Vec3 origin() const { return origin_; }
    Vec3 spacing() const { return spacing_; }

    /// Writes the text format read by load_grid_field.
    void save(const std::filesystem::path& path) const;

private:
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + dims_[0] * (j + dims_[1] * k); }
    Vec3 interpolate(const Vec3& p) const;

    std::array<std::size_t, 3> dims_;
    Vec3 origin_;
    Vec3 spacing_;
    std::vector<unsigned char> mask_;
    std::vector<Vec3> velocity_;
};

/// Reads a grid field file (format documented in docs/grid_field_format.md).
/// Throws ParseError on malformed files, non-uniform node spacing or an empty mask.
std::shared_ptr<const GridField> load_grid_field(const std::filesystem::path& path);

}  // namespace mbnav
