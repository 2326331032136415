#include <doctest.h>

#include <algorithm>
#include <map>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mbnav/analysis.hpp"
#include "mbnav/errors.hpp"

using namespace mbnav;

TEST_CASE("boxplot statistics") {
    const auto a = boxplot_stats({1, 2, 3, 4, 5});
    CHECK(a.median == 3.0);
    CHECK(a.q1 == 2.0);
    CHECK(a.q3 == 4.0);
    CHECK(a.whisker_low == 1.0);
    CHECK(a.whisker_high == 5.0);
    CHECK(a.outliers.empty());

    const auto b = boxplot_stats({1, 2, 3, 4, 100});
    REQUIRE(b.outliers.size() == 1);
    CHECK(b.outliers[0] == 100.0);
    CHECK(b.whisker_high == 4.0);

    const auto c = boxplot_stats({7, 7, 7, 7});
    CHECK(c.q1 == 7.0);
    CHECK(c.q3 == 7.0);
    CHECK(c.whisker_low == 7.0);
    CHECK(c.whisker_high == 7.0);
    CHECK(c.mean == 7.0);

    CHECK_THROWS_AS(boxplot_stats({}), std::invalid_argument);
    CHECK(quantile_sorted({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("boxplot statistics ignore ordering") {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(101);
    for (auto& x : v) x = d(rng);
    const auto ref = boxplot_stats(v);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(v.begin(), v.end(), rng);
        const auto s = boxplot_stats(v);
        CHECK(s.median == ref.median);
        CHECK(s.q1 == ref.q1);
        CHECK(s.q3 == ref.q3);
        CHECK(s.outliers == ref.outliers);
    }
    CHECK(ref.q1 <= ref.median);
    CHECK(ref.median <= ref.q3);
}

TEST_CASE("quadratic least squares") {
    const std::vector<double> x{0.5, 1.0, 2.0, 3.0, 4.5};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 + 3.0 * v + 4.0 * v * v);
    const auto c = fit_quadratic(x, y);
    CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c[1] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(c[2] == doctest::Approx(4.0).epsilon(1e-9));

    const auto k = fit_quadratic(x, std::vector<double>(5, 1.5));
    CHECK(k[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(std::abs(k[1]) < 1e-10);
    CHECK(std::abs(k[2]) < 1e-10);

    CHECK_THROWS_AS(fit_quadratic({1, 1, 2, 2}, {1, 2, 3, 4}), std::invalid_argument);

    // Residual is orthogonal to every basis column.
    const std::vector<double> noisy{1.0, 0.2, 3.3, 2.1, 5.0};
    const auto f = fit_quadratic(x, noisy);
    for (int p = 0; p < 3; ++p) {
        double s = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = noisy[i] - (f[0] + f[1] * x[i] + f[2] * x[i] * x[i]);
            s += r * std::pow(x[i], p);
            scale += std::abs(noisy[i] * std::pow(x[i], p));
        }
        CHECK(std::abs(s) < 1e-9 * scale);
    }
}

namespace {

ScenarioResult synthetic(double d_um, double u, int entrance, int ku, int kd, std::array<double, 3> g,
                         int collisions = 0, Outcome o = Outcome::Desired) {
    ScenarioResult r;
    r.spec = {d_um * 1e-6, "ACA", 0.0, u, entrance, ku, kd};
    r.outcome = o;
    r.collisions = collisions;
    for (int i = 0; i < 3; ++i) {
        r.regions[i].samples = 10;
        r.regions[i].mean = g[i];
        r.regions[i].median = g[i];
        r.regions[i].max = g[i];
        r.regions[i].azimuth = i == 1 ? 1.2 : -0.3;
    }
    return r;
}

}  // namespace

TEST_CASE("gradient maps") {
    const std::vector<ScenarioResult> one{synthetic(500, 0.45, 3, 2, 3, {0.1, 0.5, 0.2}, 4)};
    const auto maps = gradient_maps(one, "ACA", 0.45);
    REQUIRE(maps.size() == 1);
    int filled = 0;
    for (int u = 0; u < 4; ++u)
        for (int d = 0; d < 4; ++d) filled += maps[0].cells[1][u][d].has_value();
    CHECK(filled == 1);
    CHECK(*maps[0].cells[1][1][2] == doctest::Approx(0.5));
    CHECK(*maps[0].cells[3][1][2] == doctest::Approx(4.0));
    CHECK(gradient_maps(one, "MCA", 0.45).empty());

    const std::vector<ScenarioResult> twice{one[0], one[0]};
    CHECK(*gradient_maps(twice, "ACA", 0.45)[0].cells[0][1][2] == doctest::Approx(0.1));

    std::ostringstream out;
    write_map_csv(out, maps, 1);
    CHECK(out.str().find("500,3,-2D,,,0.5,") != std::string::npos);
}

TEST_CASE("gradient maps agree with a brute-force group-by") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> g(0.05, 2.0);
    std::vector<ScenarioResult> results;
    for (double d : {100.0, 500.0})
        for (int e = 1; e <= 2; ++e)
            for (int ku = 1; ku <= 4; ++ku)
                for (int kd = 1; kd <= 4; ++kd)
                    for (int rep = 0; rep < 2; ++rep) results.push_back(synthetic(d, 0.45, e, ku, kd, {g(rng), g(rng), g(rng)}));
    std::map<std::tuple<double, int, int, int>, std::pair<double, int>> acc;
    for (const auto& r : results) {
        auto& a = acc[{r.spec.d_p, r.spec.entrance, r.spec.upstream_k, r.spec.downstream_k}];
        a.first += r.regions[1].mean;
        a.second += 1;
    }
    for (const auto& m : gradient_maps(results, "ACA", 0.45))
        for (int ku = 1; ku <= 4; ++ku)
            for (int kd = 1; kd <= 4; ++kd) {
                const auto& a = acc.at({m.d_p, m.entrance, ku, kd});
                CHECK(*m.cells[1][ku - 1][kd - 1] == doctest::Approx(a.first / a.second).epsilon(1e-14));
            }
}

TEST_CASE("median ratio table") {
    std::vector<ScenarioResult> results;
    for (double d : {50.0, 1000.0})
        for (int e : {1, 5}) results.push_back(synthetic(d, 0.45, e, 2, 2, {d == 50 ? 1.0 : 0.1, d == 50 ? 4.0 : 0.5, 1.0}));
    const auto rows = median_ratio_table(results);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].factor == Factor::Diameter);
    CHECK(rows[0].ratio[1] == doctest::Approx(8.0));
    CHECK(rows[1].factor == Factor::Velocity);
    CHECK(rows[1].ratio[1] == doctest::Approx(1.0));
    CHECK(rows[2].ratio[0] == doctest::Approx(1.0));
    const auto box = grouped_boxplots(results, Factor::Diameter);
    REQUIRE(box.size() == 2);
    CHECK(box[0].magnitude[1].median == doctest::Approx(rows[0].at_min[1]));
    CHECK(box[1].magnitude[1].median == doctest::Approx(rows[0].at_max[1]));
}

TEST_CASE("factor labels and folded angles") {
    const auto r = synthetic(250, 0.35, 4, 3, 1, {0.1, 0.2, 0.3});
    CHECK(factor_label(r.spec, Factor::Diameter) == "250");
    CHECK(factor_label(r.spec, Factor::UpstreamTarget) == "-3D");
    CHECK(factor_label(r.spec, Factor::DownstreamTarget) == "+1D");
    CHECK(factor_level(r.spec, Factor::UpstreamTarget) == -3.0);
    CHECK(*region_angle_deg(r, 0) == doctest::Approx(0.3 * 180.0 / std::numbers::pi));
    ScenarioResult empty = r;
    empty.regions[2].samples = 0;
    CHECK_FALSE(region_value(empty, 2).has_value());
}

TEST_CASE("predictive equations") {
    std::vector<ScenarioResult> results;
    auto truth = [](int region, double d) { return 0.05 * (region + 1) + 20.0 / d + 1000.0 / (d * d); };
    for (double d : {50.0, 100.0, 250.0, 500.0, 1000.0})
        for (int e = 1; e <= 3; ++e) results.push_back(synthetic(d, 0.45, e, 2, 2, {truth(0, d), truth(1, d), truth(2, d)}));
    const auto med = diameter_medians(results);
    REQUIRE(med.d_p.size() == 5);
    const auto model = fit_predictive_equations(med);
    CHECK(model.coefficients[1][0] == doctest::Approx(0.10).epsilon(1e-9));
    CHECK(model.coefficients[1][1] == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(model.coefficients[1][2] == doctest::Approx(1000.0).epsilon(1e-9));
    for (double d = 50.0; d <= 1000.0; d += 25.0)
        for (int i = 0; i < 3; ++i) REQUIRE(model.predict(i, d * 1e-6) > 0.0);

    const auto poly = fit_predictive_equations(med, FitBasis::Poly);
    CHECK(poly.basis == FitBasis::Poly);
    CHECK(poly.rss[1] > 0.0);

    const auto back = fit_from_json(fit_to_json(model));
    CHECK(back.basis == model.basis);
    for (int i = 0; i < 3; ++i)
        for (int p = 0; p < 3; ++p) CHECK(back.coefficients[i][p] == model.coefficients[i][p]);
    CHECK_THROWS_AS(fit_from_json("{\"basis\": 3}"), ParseError);
    CHECK_THROWS_AS(parse_fit_basis("cubic"), ConfigError);

    DiameterMedians two;
    two.d_p = {1e-4, 2e-4};
    for (auto& m : two.median) m = {1.0, 2.0};
    CHECK_THROWS_AS(fit_predictive_equations(two), std::invalid_argument);

    const auto mode = replay_mode(model, 500e-6);
    CHECK(mode.g[1] == doctest::Approx(truth(1, 500.0)));
    CHECK(mode.gravity_compensation);
}

TEST_CASE("replay comparison") {
    std::vector<ScenarioResult> dyn;
    for (double d : {100.0, 500.0, 1000.0})
        for (int e = 1; e <= 2; ++e) dyn.push_back(synthetic(d, 0.45, e, 2, 2, {0.1 + 10 / d, 0.5 + 50 / d, 0.2}));
    const auto model = fit_predictive_equations(diameter_medians(dyn));
    const auto same = replay_comparison(dyn, dyn, model);
    CHECK(same.dynamic_success == same.constant_success);
    for (double m : same.mean_difference) CHECK(std::abs(m) < 1e-9);

    auto con = dyn;
    con[0].outcome = Outcome::Other;
    con[1].outcome = Outcome::Stalled;
    const auto rep = replay_comparison(dyn, con, model);
    CHECK(rep.total == 6);
    CHECK(rep.constant_success == doctest::Approx(4.0 / 6.0));
    REQUIRE(rep.failures_by_diameter.size() == 3);
    CHECK(rep.failures_by_diameter[0].second == 2);

    auto shifted = dyn;
    shifted[2].spec.entrance = 5;
    CHECK_THROWS_AS(replay_comparison(dyn, shifted, model), std::invalid_argument);
    CHECK_THROWS_AS(replay_comparison(dyn, {}, model), std::invalid_argument);
}
