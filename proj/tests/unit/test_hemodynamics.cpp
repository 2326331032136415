#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mbnav/errors.hpp"
#include "mbnav/hemodynamics.hpp"

using namespace mbnav;

TEST_CASE("carreau viscosity") {
    const CarreauModel m;
    CHECK(apparent_viscosity(m, 0.0) == doctest::Approx(0.056).epsilon(1e-15));
    CHECK(apparent_viscosity(m, 1e12) == doctest::Approx(0.00345).epsilon(1e-6));
    CHECK(apparent_viscosity(m, 1.0) == doctest::Approx(0.0270977).epsilon(1e-5));
    CHECK_THROWS_AS(apparent_viscosity(m, -1.0), std::domain_error);
    CarreauModel bad = m;
    bad.n = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("inlet profile") {
    CHECK(inlet_profile(0.45, 0.0, 1e-3, 0.89) == doctest::Approx(0.45));
    CHECK(inlet_profile(0.45, 1e-3, 1e-3, 0.89) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(inlet_profile(1.0, 0.5e-3, 1e-3, 0.89) == doctest::Approx(0.770526).epsilon(1e-6));
    CHECK_THROWS(inlet_profile(0.45, 2e-3, 1e-3, 0.89));
    const double n = 0.89;
    CHECK(profile_flux(0.45, 1e-3, n) ==
          doctest::Approx(0.45 * std::numbers::pi * 1e-6 * (n + 1) / (3 * n + 1)).epsilon(1e-14));
}

namespace {

// Midpoint-rule flux of the analytic field across a disc normal to `axis`.
double disc_flux(const FlowField& f, const Vec3& centre, const Vec3& axis, const Vec3& e1, double R) {
    const Vec3 e2 = cross(axis, e1);
    const int nr = 400, nt = 256;
    double q = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * R / nr;
        for (int j = 0; j < nt; ++j) {
            const double t = (j + 0.5) * 2.0 * std::numbers::pi / nt;
            const Vec3 p = centre + r * std::cos(t) * e1 + r * std::sin(t) * e2;
            q += dot(f.velocity(p), axis) * r * (R / nr) * (2.0 * std::numbers::pi / nt);
        }
    }
    return q;
}

}  // namespace

TEST_CASE("analytic flow conserves flux and splits it evenly") {
    const auto g = make_geometry("MCA");
    const AnalyticBifurcationFlow f(g, 0.45);
    const double r1 = g.main_radius();
    const double rb = g.branch_radius(Branch::Desired);
    const double q_in = profile_flux(0.45, r1, kProfileExponent);
    const double q_b = profile_flux(f.branch_centerline_speed(Branch::Desired), rb, kProfileExponent);
    CHECK(2.0 * q_b == doctest::Approx(q_in).epsilon(1e-12));

    const double q_inlet = disc_flux(f, {1e-3, 0, 0}, {1, 0, 0}, {0, 1, 0}, r1);
    CHECK(q_inlet == doctest::Approx(q_in).epsilon(1e-4));
    double q_out = 0.0;
    for (Branch b : {Branch::Desired, Branch::Other}) {
        const Vec3 c = g.outlet_center(b) - 1e-4 * g.branch_axis(b);
        q_out += disc_flux(f, c, g.branch_axis(b), g.branch_up_normal(b), g.branch_radius(b));
    }
    CHECK(q_out == doctest::Approx(q_in).epsilon(1e-4));

    CHECK(f.velocity({5e-3, r1, 0.0}).x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.velocity({5e-3, 0.0, 0.0}).x == doctest::Approx(0.45));
    const Vec3 on_axis = g.split_point() + 5e-3 * g.branch_axis(Branch::Desired);
    CHECK(norm(f.velocity(on_axis)) == doctest::Approx(f.branch_centerline_speed(Branch::Desired)));
}

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mbnav_test_" + name);
}

GridField profile_grid(double R, double u_max, std::size_t n_per_radius) {
    const double h = R / static_cast<double>(n_per_radius);
    const std::size_t nyz = 2 * n_per_radius + 1;
    const std::array<std::size_t, 3> dims{3, nyz, nyz};
    std::vector<unsigned char> mask;
    std::vector<Vec3> vel;
    for (std::size_t k = 0; k < nyz; ++k)
        for (std::size_t j = 0; j < nyz; ++j)
            for (std::size_t i = 0; i < 3; ++i) {
                const double y = -R + j * h, z = -R + k * h;
                const double r = std::hypot(y, z);
                mask.push_back(r <= R ? 1 : 0);
                vel.push_back(r <= R ? Vec3{inlet_profile(u_max, r, R, kProfileExponent), 0, 0} : Vec3{});
            }
    return GridField(dims, {0, -R, -R}, {h, h, h}, mask, vel);
}

}  // namespace

TEST_CASE("grid field reproduces a sampled profile") {
    const double R = 1e-3;
    const GridField grid = profile_grid(R, 0.45, 50);
    CHECK(grid.velocity({R / 50, 0.0, 0.0}).x == doctest::Approx(0.45).epsilon(0.01));
    CHECK(grid.velocity({R / 50, 0.3e-3, 0.1e-3}).x ==
          doctest::Approx(inlet_profile(0.45, std::hypot(0.3e-3, 0.1e-3), R, kProfileExponent)).epsilon(0.01));
    CHECK_THROWS_AS(grid.velocity({5e-3, 0.0, 0.0}), std::out_of_range);

    const auto path = temp_file("profile.grid");
    grid.save(path);
    const auto loaded = load_grid_field(path);
    CHECK(loaded->dims() == grid.dims());
    CHECK(loaded->velocity({R / 60, 0.2e-3, -0.4e-3}) == grid.velocity({R / 60, 0.2e-3, -0.4e-3}));
    std::filesystem::remove(path);
}

TEST_CASE("uniform grid field") {
    const std::array<std::size_t, 3> dims{4, 4, 4};
    const GridField f(dims, {}, {1e-3, 1e-3, 1e-3}, std::vector<unsigned char>(64, 1),
                      std::vector<Vec3>(64, Vec3{0.3, 0, 0}));
    const auto s = f.sample({1.3e-3, 2.2e-3, 0.7e-3});
    CHECK(s.velocity.x == doctest::Approx(0.3));
    CHECK(s.velocity.y == 0.0);
    CHECK(s.shear_rate == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("malformed grid files") {
    const auto path = temp_file("bad.grid");
    const GridField f({2, 2, 2}, {}, {1e-3, 1e-3, 1e-3}, std::vector<unsigned char>(8, 1),
                      std::vector<Vec3>(8, Vec3{0.1, 0, 0}));
    f.save(path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    {
        std::ofstream out(path);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_grid_field(path), ParseError);
    {
        std::ofstream out(path);
        out << "not a grid\n";
    }
    CHECK_THROWS_AS(load_grid_field(path), ParseError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_grid_field(path), ParseError);
}

TEST_CASE("documented grid file example loads") {
    const auto path = temp_file("doc_example.grid");
    {
        std::ofstream out(path);
        out << "MBNAV-GRID 1\ndims 2 2 2\norigin 0 0 0\nspacing 0.001 0.001 0.001\nunits m m/s\n"
               "0 0 0 1 0.1 0 0\n0.001 0 0 1 0.1 0 0\n0 0.001 0 1 0.1 0 0\n0.001 0.001 0 1 0.1 0 0\n"
               "0 0 0.001 1 0.1 0 0\n0.001 0 0.001 1 0.1 0 0\n0 0.001 0.001 1 0.1 0 0\n"
               "0.001 0.001 0.001 1 0.1 0 0\n";
    }
    const auto f = load_grid_field(path);
    CHECK(f->velocity({0.4e-3, 0.7e-3, 0.2e-3}).x == doctest::Approx(0.1));
    std::filesystem::remove(path);
}
