#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mbnav/analysis.hpp"
#include "mbnav/config.hpp"
#include "mbnav/errors.hpp"
#include "mbnav/sweep.hpp"
#include "mbnav/validation.hpp"

namespace py = pybind11;
using namespace mbnav;

namespace {

py::tuple vec(const Vec3& v) { return py::make_tuple(v.x, v.y, v.z); }

RunConfig config_from(const py::dict& overrides) {
    KeyValueFile kv;
    for (const auto& [k, v] : overrides) kv.set(py::str(k), py::str(v));
    return apply_config(RunConfig{}, kv);
}

py::dict summary_dict(const RegionSummary& s) {
    py::dict d;
    d["samples"] = s.samples;
    d["mean"] = s.mean;
    d["median"] = s.median;
    d["max"] = s.max;
    d["azimuth"] = s.azimuth;
    return d;
}

py::dict simulate(const py::dict& overrides, bool record_path) {
    const RunConfig c = config_from(overrides);
    const SweepSetup setup = make_setup(c);
    const ScenarioSpec spec = c.scenario();
    const BifurcationGeometry g = setup.geometry(spec);
    const auto flow = setup.flow(g, spec);
    Microrobot robot = setup.robot;
    const TargetPlan plan = place_targets(g, spec.d_p, spec.upstream_k, spec.downstream_k);
    SimulationSettings settings = setup.settings;
    settings.record_path = record_path;
    TrajectoryRecord rec;
    {
        py::gil_scoped_release release;
        rec = run_trajectory(robot, entrance_positions(g, robot.radius())[spec.entrance - 1], plan, g, *flow,
                             setup.mode(spec), settings);
    }
    py::dict out;
    out["outcome"] = std::string(to_string(rec.outcome));
    out["collisions"] = rec.collisions;
    out["steps"] = rec.steps;
    out["transit_time"] = rec.transit_time;
    out["min_clearance"] = rec.min_clearance;
    py::list regions;
    for (int i = 0; i < 3; ++i) regions.append(summary_dict(summarize_region(rec.magnitude[i], rec.azimuth[i])));
    out["regions"] = regions;
    if (record_path) {
        py::list path;
        for (const auto& p : rec.path)
            path.append(py::make_tuple(p.t, vec(p.position), vec(p.velocity), vec(p.grad_B), static_cast<int>(p.region),
                                       p.collision));
        out["path"] = path;
    }
    return out;
}

std::string sweep_csv(const DesignLevels& levels, const py::dict& overrides, unsigned workers) {
    const RunConfig c = config_from(overrides);
    const SweepSetup setup = make_setup(c);
    const auto grid = factorial_grid(levels);
    std::vector<ScenarioResult> results;
    {
        py::gil_scoped_release release;
        results = run_sweep(grid, setup, workers);
    }
    std::ostringstream out;
    write_results_csv(out, results);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_mbnav, m) {
    m.doc() = "Magnetic microrobot navigation in cerebral artery bifurcations.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<CarreauModel>(m, "CarreauModel")
        .def(py::init<>())
        .def_readwrite("eta_0", &CarreauModel::eta_0)
        .def_readwrite("eta_inf", &CarreauModel::eta_inf)
        .def_readwrite("lambda_", &CarreauModel::lambda)
        .def_readwrite("n", &CarreauModel::n);
    m.def("apparent_viscosity", &apparent_viscosity, py::arg("model"), py::arg("shear_rate"));
    m.def("inlet_profile", &inlet_profile, py::arg("u_max"), py::arg("r"), py::arg("R"),
          py::arg("n_profile") = kProfileExponent);
    m.def("profile_flux", &profile_flux, py::arg("u_max"), py::arg("R"), py::arg("n_profile") = kProfileExponent);

    py::class_<BifurcationGeometry>(m, "Geometry")
        .def_readonly("d_main", &BifurcationGeometry::d_main)
        .def_readonly("d_branch_desired", &BifurcationGeometry::d_branch_desired)
        .def_readonly("d_branch_other", &BifurcationGeometry::d_branch_other)
        .def_readonly("l_main", &BifurcationGeometry::l_main)
        .def_readonly("l_branch", &BifurcationGeometry::l_branch)
        .def_readonly("branch_half_angle", &BifurcationGeometry::branch_half_angle)
        .def("wall_distance", [](const BifurcationGeometry& g, double x, double y, double z) {
            const WallQuery q = wall_distance(g, {x, y, z});
            return py::make_tuple(q.distance, vec(q.normal));
        });
    m.def("make_geometry", py::overload_cast<std::string_view>(&make_geometry), py::arg("preset"));
    m.def("murray_branch_diameter", &murray_branch_diameter);
    m.def("entrance_positions", [](const BifurcationGeometry& g, double r_p) {
        py::list out;
        for (const Vec3& p : entrance_positions(g, r_p)) out.append(vec(p));
        return out;
    });

    py::class_<Microrobot>(m, "Microrobot")
        .def(py::init<>())
        .def_readwrite("d_p", &Microrobot::d_p)
        .def_readwrite("rho_p", &Microrobot::rho_p)
        .def_readwrite("m_s", &Microrobot::m_s)
        .def("volume", &Microrobot::volume);
    m.def("relaxation_time", &relaxation_time, py::arg("robot"), py::arg("eta"));
    m.def("settling_velocity", &settling_velocity, py::arg("robot"), py::arg("fluid_density"), py::arg("eta"),
          py::arg("gravity") = kStandardGravity);

    py::class_<DesignLevels>(m, "DesignLevels")
        .def(py::init<>())
        .def_readwrite("diameters", &DesignLevels::diameters)
        .def_readwrite("arteries", &DesignLevels::arteries)
        .def_readwrite("velocities", &DesignLevels::velocities)
        .def_readwrite("entrances", &DesignLevels::entrances)
        .def_readwrite("upstream_k", &DesignLevels::upstream_k)
        .def_readwrite("downstream_k", &DesignLevels::downstream_k)
        .def_readwrite("vessel_offset", &DesignLevels::vessel_offset)
        .def("size", &DesignLevels::size);
    m.def("table2_levels", &table2_levels);
    m.def("table4_levels", &table4_levels);

    m.def("simulate", &simulate, py::arg("config") = py::dict(), py::arg("record_path") = false,
          "Run one trajectory; config holds run-config keys, e.g. {'d_um': 250}.");
    m.def("sweep_csv", &sweep_csv, py::arg("levels"), py::arg("config") = py::dict(), py::arg("workers") = 1,
          "Run a factorial design and return the results CSV text.");

    py::class_<BoxplotStats>(m, "BoxplotStats")
        .def_readonly("count", &BoxplotStats::count)
        .def_readonly("mean", &BoxplotStats::mean)
        .def_readonly("median", &BoxplotStats::median)
        .def_readonly("q1", &BoxplotStats::q1)
        .def_readonly("q3", &BoxplotStats::q3)
        .def_readonly("whisker_low", &BoxplotStats::whisker_low)
        .def_readonly("whisker_high", &BoxplotStats::whisker_high)
        .def_readonly("outliers", &BoxplotStats::outliers);
    m.def("boxplot_stats", &boxplot_stats, py::arg("values"));
    m.def("fit_quadratic", &fit_quadratic, py::arg("x"), py::arg("y"));
    m.def("fit_results_csv", [](const std::string& csv, const std::string& basis) {
        std::istringstream in(csv);
        return fit_to_json(fit_predictive_equations(diameter_medians(read_results_csv(in)), parse_fit_basis(basis)));
    }, py::arg("csv"), py::arg("basis") = "inv", "Fit region gradients vs diameter; returns the fit JSON text.");

    m.def("validate", [] {
        py::list out;
        for (const auto& c : run_oracle_suite()) out.append(py::make_tuple(c.name, c.passed, c.error, c.tolerance));
        return out;
    }, "Run the oracle checks; returns (name, passed, error, tolerance) tuples.");
}
