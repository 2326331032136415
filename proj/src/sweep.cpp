#include "mbnav/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mbnav/errors.hpp"
#include "mbnav/keyvalue.hpp"

namespace mbnav {

std::size_t DesignLevels::size() const {
    return diameters.size() * arteries.size() * velocities.size() * entrances.size() * upstream_k.size() *
           downstream_k.size();
}

DesignLevels table2_levels() {
    DesignLevels l;
    l.diameters = {50e-6, 100e-6, 250e-6, 500e-6, 1000e-6};
    l.arteries = {"ACA", "MCA", "PCA"};
    l.velocities = {0.25, 0.35, 0.45, 0.55, 0.65};
    l.entrances = {1, 2, 3, 4, 5};
    l.upstream_k = {1, 2, 3, 4};
    l.downstream_k = {1, 2, 3, 4};
    return l;
}

DesignLevels table4_levels() {
    DesignLevels l = table2_levels();
    l.diameters = {75e-6, 175e-6, 375e-6, 650e-6, 850e-6};
    l.velocities = {0.30, 0.40, 0.50, 0.60, 0.70};
    l.vessel_offset = 0.2e-3;
    return l;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ParseError("empty entry in list '" + text + "'");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double to_double(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw ParseError("design key '" + key + "': '" + s + "' is not a number");
    return v;
}

}  // namespace

DesignLevels load_design(const std::filesystem::path& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    DesignLevels l = table2_levels();
    auto doubles = [&](const std::string& key, double scale, std::vector<double>& dst) {
        if (auto v = kv.get(key)) {
            dst.clear();
            for (const auto& s : split_list(*v)) dst.push_back(to_double(s, key) * scale);
        }
    };
    auto ints = [&](const std::string& key, std::vector<int>& dst) {
        if (auto v = kv.get(key)) {
            dst.clear();
            for (const auto& s : split_list(*v)) {
                const double d = to_double(s, key);
                if (d != std::floor(d)) throw ParseError("design key '" + key + "': '" + s + "' is not an integer");
                dst.push_back(static_cast<int>(d));
            }
        }
    };
    doubles("diameters_um", 1e-6, l.diameters);
    doubles("velocities", 1.0, l.velocities);
    ints("entrances", l.entrances);
    ints("upstream_k", l.upstream_k);
    ints("downstream_k", l.downstream_k);
    if (auto v = kv.get("arteries")) l.arteries = split_list(*v);
    if (auto v = kv.get_double("vessel_offset_mm")) l.vessel_offset = *v * 1e-3;

    for (const auto& [key, _] : kv.values()) {
        static const std::array<const char*, 7> known = {"diameters_um", "arteries",     "velocities",
                                                          "entrances",    "upstream_k",   "downstream_k",
                                                          "vessel_offset_mm"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(path.string() + ": unknown design key '" + key + "'");
    }
    for (int e : l.entrances)
        if (e < 1 || e > 5) throw ConfigError(path.string() + ": entrances must be 1..5");
    for (const auto* ks : {&l.upstream_k, &l.downstream_k})
        for (int k : *ks)
            if (k < 1 || k > 4) throw ConfigError(path.string() + ": target offsets must be 1..4");
    return l;
}

std::vector<ScenarioSpec> factorial_grid(const DesignLevels& l) {
    if (l.diameters.empty() || l.arteries.empty() || l.velocities.empty() || l.entrances.empty() ||
        l.upstream_k.empty() || l.downstream_k.empty())
        throw std::invalid_argument("factorial_grid: every factor needs at least one level");
    std::vector<ScenarioSpec> grid;
    grid.reserve(l.size());
    for (double d : l.diameters)
        for (const auto& a : l.arteries)
            for (double u : l.velocities)
                for (int e : l.entrances)
                    for (int ku : l.upstream_k)
                        for (int kd : l.downstream_k) grid.push_back({d, a, l.vessel_offset, u, e, ku, kd});
    return grid;
}

RegionSummary summarize_region(const std::vector<double>& magnitude, const std::vector<double>& azimuth) {
    RegionSummary s;
    s.samples = magnitude.size();
    if (magnitude.empty()) return s;
    double sum = 0.0;
    for (double v : magnitude) {
        sum += v;
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(magnitude.size());

    std::vector<double> sorted = magnitude;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    double sx = 0.0, sy = 0.0;
    for (double a : azimuth) {
        sx += std::cos(a);
        sy += std::sin(a);
    }
    s.azimuth = std::atan2(sy, sx);
    return s;
}

BifurcationGeometry scenario_geometry(const ScenarioSpec& spec) {
    BifurcationGeometry g = make_geometry(spec.artery);
    g.d_main += spec.vessel_offset;
    g.d_branch_desired += spec.vessel_offset;
    g.d_branch_other += spec.vessel_offset;
    g.l_branch = 4.0 * g.d_main;
    g.validate();
    return g;
}

SweepSetup default_setup() {
    SweepSetup s;
    s.geometry = scenario_geometry;
    s.flow = [](const BifurcationGeometry& g, const ScenarioSpec& spec) {
        return analytic_bifurcation_flow(g, spec.u_max);
    };
    s.mode = [](const ScenarioSpec&) { return ControllerMode{DynamicMode{}}; };
    return s;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const SweepSetup& setup) {
    ScenarioResult r;
    r.spec = spec;
    try {
        const BifurcationGeometry g = setup.geometry(spec);
        const auto flow = setup.flow(g, spec);
        Microrobot robot = setup.robot;
        robot.d_p = spec.d_p;
        if (spec.entrance < 1 || spec.entrance > 5) throw std::invalid_argument("entrance index must be 1..5");
        const Vec3 start = entrance_positions(g, robot.radius())[spec.entrance - 1];
        const TargetPlan plan = place_targets(g, spec.d_p, spec.upstream_k, spec.downstream_k);

        SimulationSettings settings = setup.settings;
        settings.record_path = false;
        const TrajectoryRecord rec = run_trajectory(robot, start, plan, g, *flow, setup.mode(spec), settings);
        r.outcome = rec.outcome;
        r.collisions = rec.collisions;
        r.steps = rec.steps;
        r.transit_time = rec.transit_time;
        r.min_clearance = rec.min_clearance;
        for (int i = 0; i < 3; ++i) r.regions[i] = summarize_region(rec.magnitude[i], rec.azimuth[i]);
    } catch (const std::exception& e) {
        r.outcome = Outcome::Stalled;
        r.error = e.what();
    }
    return r;
}

std::vector<ScenarioResult> run_sweep(const std::vector<ScenarioSpec>& grid, const SweepSetup& setup,
                                      unsigned workers) {
    std::vector<ScenarioResult> results(grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) results[i] = run_scenario(grid[i], setup);
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(grid.size(), 1))));
    if (workers == 1) {
        work();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();  // joins
    return results;
}

double navigation_success(const std::vector<ScenarioResult>& results) {
    if (results.empty()) throw std::invalid_argument("navigation_success: no results");
    const auto ok = std::count_if(results.begin(), results.end(),
                                  [](const ScenarioResult& r) { return r.outcome == Outcome::Desired; });
    return static_cast<double>(ok) / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// CSV persistence

namespace {

constexpr const char* kUnitsLine =
    "# units: d_um um, vessel_offset_mm mm, u_max m/s, transit_s s, min_clearance_m m, "
    "g*_mean/median/max T/m, g*_azimuth_deg deg (circular mean, signed, from +x)";

constexpr std::array<const char*, 13> kSpecColumns = {
    "d_um", "artery", "vessel_offset_mm", "u_max", "entrance", "upstream_k", "downstream_k",
    "outcome", "collisions", "steps", "transit_s", "min_clearance_m", "error"};

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + '"';
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

Outcome parse_outcome(const std::string& s, const std::string& where) {
    for (Outcome o : {Outcome::Desired, Outcome::Other, Outcome::Stalled})
        if (s == to_string(o)) return o;
    throw ParseError(where + ": unknown outcome '" + s + "'");
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ScenarioResult>& results) {
    out << kUnitsLine << '\n';
    for (std::size_t i = 0; i < kSpecColumns.size(); ++i) out << (i ? "," : "") << kSpecColumns[i];
    for (int g = 1; g <= 3; ++g)
        out << ",g" << g << "_samples,g" << g << "_mean,g" << g << "_median,g" << g << "_max,g" << g << "_azimuth_deg";
    out << '\n';

    std::ostringstream row;
    row << std::setprecision(12);
    for (const auto& r : results) {
        row.str("");
        row << r.spec.d_p * 1e6 << ',' << csv_quote(r.spec.artery) << ',' << r.spec.vessel_offset * 1e3 << ','
            << r.spec.u_max << ',' << r.spec.entrance << ',' << r.spec.upstream_k << ',' << r.spec.downstream_k << ','
            << to_string(r.outcome) << ',' << r.collisions << ',' << r.steps << ',' << r.transit_time << ','
            << r.min_clearance << ',' << csv_quote(r.error);
        for (const auto& s : r.regions) {
            row << ',' << s.samples;
            if (s.samples == 0) {
                row << ",,,,";
            } else {
                row << ',' << s.mean << ',' << s.median << ',' << s.max << ',' << s.azimuth * 180.0 / std::numbers::pi;
            }
        }
        out << row.str() << '\n';
    }
}

void save_results_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_results_csv(out, results);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ScenarioResult> read_results_csv(std::istream& in, const std::string& origin) {
    std::vector<ScenarioResult> results;
    std::string line;
    int lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (header.empty()) {
            header = split_csv_row(line);
            if (header.size() != kSpecColumns.size() + 15 || header[0] != "d_um")
                throw ParseError(origin + ":" + std::to_string(lineno) + ": not a results table header");
            continue;
        }
        const auto c = split_csv_row(line);
        const std::string where = origin + ":" + std::to_string(lineno);
        if (c.size() != header.size()) throw ParseError(where + ": expected " + std::to_string(header.size()) + " columns");
        auto num = [&](std::size_t i) {
            try {
                std::size_t used = 0;
                const double v = std::stod(c[i], &used);
                if (used == c[i].size()) return v;
            } catch (const std::exception&) {
            }
            throw ParseError(where + ": column '" + header[i] + "' is not a number");
        };
        ScenarioResult r;
        r.spec.d_p = num(0) * 1e-6;
        r.spec.artery = c[1];
        r.spec.vessel_offset = num(2) * 1e-3;
        r.spec.u_max = num(3);
        r.spec.entrance = static_cast<int>(num(4));
        r.spec.upstream_k = static_cast<int>(num(5));
        r.spec.downstream_k = static_cast<int>(num(6));
        r.outcome = parse_outcome(c[7], where);
        r.collisions = static_cast<int>(num(8));
        r.steps = static_cast<std::size_t>(num(9));
        r.transit_time = num(10);
        r.min_clearance = num(11);
        r.error = c[12];
        for (int g = 0; g < 3; ++g) {
            const std::size_t b = kSpecColumns.size() + 5 * g;
            auto& s = r.regions[g];
            s.samples = static_cast<std::size_t>(num(b));
            if (s.samples == 0) continue;
            s.mean = num(b + 1);
            s.median = num(b + 2);
            s.max = num(b + 3);
            s.azimuth = num(b + 4) * std::numbers::pi / 180.0;
        }
        results.push_back(std::move(r));
    }
    if (header.empty()) throw ParseError(origin + ": missing header");
    return results;
}

std::vector<ScenarioResult> load_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_results_csv(in, path.string());
}

}  // namespace mbnav
