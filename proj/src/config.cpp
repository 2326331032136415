#include "mbnav/config.hpp"

#include <algorithm>
#include <set>
#include <string_view>

#include "mbnav/errors.hpp"

namespace mbnav {

namespace {

const std::set<std::string, std::less<>>& known_keys() {
    static const std::set<std::string, std::less<>> keys = {
        "artery",        "geometry_file",   "vessel_offset_mm",     "flow",       "u_max",
        "rho_f",         "profile_n",       "eta_0",                "eta_inf",    "lambda",
        "carreau_n",     "d_um",            "rho_p",                "m_s",        "magnetization_table",
        "field_magnitude_T", "entrance",    "upstream_k",           "downstream_k", "mode",
        "g1",            "g2",              "g3",                   "gravity_compensation", "gravity",
        "cor",           "tau_viscosity",   "gradient_cap",         "max_steps",  "out_dir",
        "workers"};
    return keys;
}

TauViscosity parse_tau_viscosity(const std::string& s) {
    if (s == "local") return TauViscosity::LocalCarreau;
    if (s == "eta_inf") return TauViscosity::EtaInf;
    if (s == "eta_0") return TauViscosity::Eta0;
    throw ConfigError("tau_viscosity: expected local, eta_inf or eta_0, got '" + s + "'");
}

BifurcationGeometry config_geometry(const RunConfig& c, const std::string& artery) {
    BifurcationGeometry g = c.geometry_file ? load_geometry_config(*c.geometry_file) : make_geometry(artery);
    const double offset = c.vessel_offset_mm * 1e-3;
    if (offset != 0.0) {
        g.d_main += offset;
        g.d_branch_desired += offset;
        g.d_branch_other += offset;
        g.l_branch = 4.0 * g.d_main;
    }
    g.validate();
    return g;
}

}  // namespace

ScenarioSpec RunConfig::scenario() const {
    ScenarioSpec s;
    s.d_p = d_um * 1e-6;
    s.artery = geometry_file ? geometry_file->stem().string() : artery;
    s.vessel_offset = vessel_offset_mm * 1e-3;
    s.u_max = u_max;
    s.entrance = entrance;
    s.upstream_k = upstream_k;
    s.downstream_k = downstream_k;
    return s;
}

void RunConfig::validate() const {
    if (!(d_um > 0.0)) throw ConfigError("d_um: microrobot diameter must be positive");
    if (!(rho_p > 0.0)) throw ConfigError("rho_p: must be positive");
    if (!(rho_f > 0.0)) throw ConfigError("rho_f: must be positive");
    if (!magnetization_table && !(m_s > 0.0)) throw ConfigError("m_s: must be positive");
    if (magnetization_table && !field_magnitude_T)
        throw ConfigError("magnetization_table requires field_magnitude_T");
    if (field_magnitude_T && !(*field_magnitude_T >= 0.0)) throw ConfigError("field_magnitude_T: must be >= 0");
    if (!(u_max >= 0.0)) throw ConfigError("u_max: must be >= 0");
    if (!(profile_n > 0.0)) throw ConfigError("profile_n: must be positive");
    if (entrance < 1 || entrance > 5) throw ConfigError("entrance: must be 1..5");
    if (upstream_k < 1 || upstream_k > 4) throw ConfigError("upstream_k: must be 1..4");
    if (downstream_k < 1 || downstream_k > 4) throw ConfigError("downstream_k: must be 1..4");
    if (mode != "dynamic" && mode != "constant") throw ConfigError("mode: expected dynamic or constant");
    if (std::any_of(g.begin(), g.end(), [](double v) { return !(v >= 0.0); }))
        throw ConfigError("g1..g3: constant gradients must be >= 0");
    if (!(cor >= 0.0 && cor <= 1.0)) throw ConfigError("cor: must lie in [0, 1]");
    if (gradient_cap && !(*gradient_cap > 0.0)) throw ConfigError("gradient_cap: must be positive");
    if (max_steps == 0) throw ConfigError("max_steps: must be positive");
    if (workers == 0) throw ConfigError("workers: must be at least 1");
    if (flow != "analytic" && flow.rfind("grid:", 0) != 0)
        throw ConfigError("flow: expected analytic or grid:<path>, got '" + flow + "'");
    try {
        carreau.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("carreau: ") + e.what());
    }
    BifurcationGeometry geom;
    try {
        geom = config_geometry(*this, artery);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("geometry: ") + e.what());
    }
    const double r_p = 0.5 * d_um * 1e-6;
    const double r_min = std::min({geom.main_radius(), geom.branch_radius(Branch::Desired),
                                   geom.branch_radius(Branch::Other)});
    if (r_p >= r_min)
        throw ConfigError("d_um: microrobot radius " + std::to_string(r_p * 1e3) +
                          " mm does not fit the narrowest vessel radius " + std::to_string(r_min * 1e3) + " mm");
}

RunConfig apply_config(RunConfig c, const KeyValueFile& kv) {
    for (const auto& [key, _] : kv.values())
        if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    try {
        if (auto v = kv.get("artery")) c.artery = *v;
        if (auto v = kv.get("geometry_file")) c.geometry_file = *v;
        if (auto v = kv.get_double("vessel_offset_mm")) c.vessel_offset_mm = *v;
        if (auto v = kv.get("flow")) c.flow = *v;
        if (auto v = kv.get_double("u_max")) c.u_max = *v;
        if (auto v = kv.get_double("rho_f")) c.rho_f = *v;
        if (auto v = kv.get_double("profile_n")) c.profile_n = *v;
        if (auto v = kv.get_double("eta_0")) c.carreau.eta_0 = *v;
        if (auto v = kv.get_double("eta_inf")) c.carreau.eta_inf = *v;
        if (auto v = kv.get_double("lambda")) c.carreau.lambda = *v;
        if (auto v = kv.get_double("carreau_n")) c.carreau.n = *v;
        if (auto v = kv.get_double("d_um")) c.d_um = *v;
        if (auto v = kv.get_double("rho_p")) c.rho_p = *v;
        if (auto v = kv.get_double("m_s")) c.m_s = *v;
        if (auto v = kv.get("magnetization_table")) c.magnetization_table = *v;
        if (auto v = kv.get_double("field_magnitude_T")) c.field_magnitude_T = *v;
        if (auto v = kv.get_int("entrance")) c.entrance = *v;
        if (auto v = kv.get_int("upstream_k")) c.upstream_k = *v;
        if (auto v = kv.get_int("downstream_k")) c.downstream_k = *v;
        if (auto v = kv.get("mode")) c.mode = *v;
        if (auto v = kv.get_double("g1")) c.g[0] = *v;
        if (auto v = kv.get_double("g2")) c.g[1] = *v;
        if (auto v = kv.get_double("g3")) c.g[2] = *v;
        if (auto v = kv.get_bool("gravity_compensation")) c.gravity_compensation = *v;
        if (auto v = kv.get_bool("gravity")) c.gravity = *v;
        if (auto v = kv.get_double("cor")) c.cor = *v;
        if (auto v = kv.get("tau_viscosity")) c.tau_viscosity = parse_tau_viscosity(*v);
        if (auto v = kv.get("gradient_cap")) {
            if (*v == "none") c.gradient_cap.reset();
            else c.gradient_cap = kv.get_double("gradient_cap");
        }
        if (auto v = kv.get_int("max_steps")) {
            if (*v <= 0) throw ConfigError("max_steps: must be positive");
            c.max_steps = static_cast<std::size_t>(*v);
        }
        if (auto v = kv.get("out_dir")) c.out_dir = *v;
        if (auto v = kv.get_int("workers")) {
            if (*v <= 0) throw ConfigError("workers: must be at least 1");
            c.workers = static_cast<unsigned>(*v);
        }
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    try {
        return apply_config(RunConfig{}, KeyValueFile::load(path));
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

SweepSetup make_setup(const RunConfig& config) {
    config.validate();
    SweepSetup s;
    const RunConfig c = config;
    if (c.geometry_file) {
        const BifurcationGeometry g = config_geometry(c, c.artery);
        s.geometry = [g, c](const ScenarioSpec& spec) {
            if (spec.vessel_offset == c.vessel_offset_mm * 1e-3) return g;
            RunConfig other = c;
            other.vessel_offset_mm = spec.vessel_offset * 1e3;
            return config_geometry(other, spec.artery);
        };
    } else {
        s.geometry = scenario_geometry;
    }

    if (c.flow == "analytic") {
        s.flow = [n = c.profile_n, rho = c.rho_f](const BifurcationGeometry& g, const ScenarioSpec& spec) {
            return analytic_bifurcation_flow(g, spec.u_max, n, rho);
        };
    } else {
        std::shared_ptr<const FlowField> grid;
        try {
            grid = load_grid_field(c.flow.substr(5));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("flow: ") + e.what());
        }
        s.flow = [grid](const BifurcationGeometry&, const ScenarioSpec&) { return grid; };
    }

    if (c.mode == "constant") {
        const ConstantMode m{c.g, c.gravity_compensation};
        s.mode = [m](const ScenarioSpec&) { return ControllerMode{m}; };
    } else {
        s.mode = [](const ScenarioSpec&) { return ControllerMode{DynamicMode{}}; };
    }

    s.settings.physics.rho_f = c.rho_f;
    if (!c.gravity) s.settings.physics.gravity = Vec3{};
    s.settings.carreau = c.carreau;
    s.settings.tau_viscosity = c.tau_viscosity;
    s.settings.cor = c.cor;
    s.settings.gradient_cap = c.gradient_cap;
    s.settings.field_magnitude = c.field_magnitude_T;
    s.settings.max_steps = c.max_steps;

    s.robot.d_p = c.d_um * 1e-6;
    s.robot.rho_p = c.rho_p;
    s.robot.m_s = c.m_s;
    if (c.magnetization_table) {
        try {
            s.robot.curve = MagnetizationCurve::load_csv(*c.magnetization_table);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("magnetization_table: ") + e.what());
        }
    }
    return s;
}

}  // namespace mbnav
