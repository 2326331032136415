#include "mbnav/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mbnav/errors.hpp"

namespace mbnav {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("boxplot_stats: no data");
    std::sort(values.begin(), values.end());
    BoxplotStats s;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = s.q1;
    s.whisker_high = s.q3;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        } else {
            s.whisker_low = std::min(s.whisker_low, v);
            s.whisker_high = std::max(s.whisker_high, v);
        }
    }
    return s;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty data");
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

std::string_view to_string(Factor f) {
    switch (f) {
        case Factor::Diameter: return "diameter";
        case Factor::Artery: return "artery";
        case Factor::Velocity: return "velocity";
        case Factor::Entrance: return "entrance";
        case Factor::UpstreamTarget: return "upstream_target";
        case Factor::DownstreamTarget: return "downstream_target";
    }
    return "?";
}

double factor_level(const ScenarioSpec& s, Factor f) {
    switch (f) {
        case Factor::Diameter: return std::round(s.d_p * 1e9) / 1e3;  // um, rounded to nm
        case Factor::Artery: return 0.0;
        case Factor::Velocity: return s.u_max;
        case Factor::Entrance: return s.entrance;
        case Factor::UpstreamTarget: return -s.upstream_k;
        case Factor::DownstreamTarget: return s.downstream_k;
    }
    return 0.0;
}

std::string factor_label(const ScenarioSpec& s, Factor f) {
    std::ostringstream os;
    switch (f) {
        case Factor::Diameter: os << factor_level(s, f); break;
        case Factor::Artery: os << s.artery; break;
        case Factor::Velocity: os << s.u_max; break;
        case Factor::Entrance: os << s.entrance; break;
        case Factor::UpstreamTarget: os << '-' << s.upstream_k << 'D'; break;
        case Factor::DownstreamTarget: os << '+' << s.downstream_k << 'D'; break;
    }
    return os.str();
}

std::optional<double> region_value(const ScenarioResult& r, int region) {
    const auto& s = r.regions.at(region);
    if (s.samples == 0) return std::nullopt;
    return s.mean;
}

std::optional<double> region_angle_deg(const ScenarioResult& r, int region) {
    const auto& s = r.regions.at(region);
    if (s.samples == 0) return std::nullopt;
    return std::abs(s.azimuth) * 180.0 / std::numbers::pi;
}

namespace {

// Results bucketed by factor level, ordered by level (artery by name).
std::map<std::pair<double, std::string>, std::vector<const ScenarioResult*>> group_by(
    const std::vector<ScenarioResult>& results, Factor f) {
    std::map<std::pair<double, std::string>, std::vector<const ScenarioResult*>> groups;
    for (const auto& r : results) groups[{factor_level(r.spec, f), factor_label(r.spec, f)}].push_back(&r);
    return groups;
}

std::vector<double> collect(const std::vector<const ScenarioResult*>& rs, int region, bool angle) {
    std::vector<double> v;
    for (const auto* r : rs) {
        const auto x = angle ? region_angle_deg(*r, region) : region_value(*r, region);
        if (x) v.push_back(*x);
    }
    return v;
}

void write_number(std::ostream& out, std::optional<double> v) {
    if (v) out << *v;
}

}  // namespace

std::vector<GroupStats> grouped_boxplots(const std::vector<ScenarioResult>& results, Factor f) {
    std::vector<GroupStats> out;
    for (const auto& [key, rs] : group_by(results, f)) {
        GroupStats g{f, key.second, {}, {}};
        for (int i = 0; i < 3; ++i) {
            const auto mags = collect(rs, i, false);
            if (mags.empty()) continue;
            g.magnitude[i] = boxplot_stats(mags);
            g.angle[i] = boxplot_stats(collect(rs, i, true));
        }
        out.push_back(std::move(g));
    }
    return out;
}

void write_boxplots_csv(std::ostream& out, const std::vector<GroupStats>& groups) {
    out << "# magnitude rows in T/m, angle rows in deg folded to [0, 180]\n";
    out << "factor,level,region,quantity,count,mean,median,q1,q3,whisker_low,whisker_high,outliers\n";
    out << std::setprecision(10);
    for (const auto& g : groups) {
        for (int i = 0; i < 3; ++i) {
            for (int q = 0; q < 2; ++q) {
                const BoxplotStats& s = q == 0 ? g.magnitude[i] : g.angle[i];
                if (s.count == 0) continue;
                out << to_string(g.factor) << ',' << g.level << ",G" << i + 1 << ',' << (q == 0 ? "magnitude" : "angle")
                    << ',' << s.count << ',' << s.mean << ',' << s.median << ',' << s.q1 << ',' << s.q3 << ','
                    << s.whisker_low << ',' << s.whisker_high << ',';
                for (std::size_t k = 0; k < s.outliers.size(); ++k) out << (k ? ";" : "") << s.outliers[k];
                out << '\n';
            }
        }
    }
}

std::vector<GradientMap> gradient_maps(const std::vector<ScenarioResult>& results, const std::string& artery,
                                       double u_max) {
    struct Acc {
        std::array<double, 4> sum{};
        std::array<int, 4> n{};
    };
    std::map<std::pair<double, int>, std::array<std::array<Acc, 4>, 4>> acc;
    for (const auto& r : results) {
        if (r.spec.artery != artery || std::abs(r.spec.u_max - u_max) > 1e-9) continue;
        if (r.spec.upstream_k < 1 || r.spec.upstream_k > 4 || r.spec.downstream_k < 1 || r.spec.downstream_k > 4)
            continue;
        auto& cell = acc[{factor_level(r.spec, Factor::Diameter), r.spec.entrance}][r.spec.upstream_k - 1]
                        [r.spec.downstream_k - 1];
        for (int i = 0; i < 3; ++i) {
            if (const auto v = region_value(r, i)) {
                cell.sum[i] += *v;
                ++cell.n[i];
            }
        }
        cell.sum[3] += r.collisions;
        ++cell.n[3];
    }
    std::vector<GradientMap> maps;
    for (const auto& [key, table] : acc) {
        GradientMap m;
        m.d_p = key.first * 1e-6;
        m.entrance = key.second;
        for (int layer = 0; layer < 4; ++layer)
            for (int u = 0; u < 4; ++u)
                for (int d = 0; d < 4; ++d)
                    if (table[u][d].n[layer] > 0) m.cells[layer][u][d] = table[u][d].sum[layer] / table[u][d].n[layer];
        maps.push_back(m);
    }
    return maps;
}

void write_map_csv(std::ostream& out, const std::vector<GradientMap>& maps, int layer) {
    if (layer < 0 || layer > 3) throw std::invalid_argument("write_map_csv: layer must be 0..3");
    out << (layer == 3 ? "# mean collisions per trajectory\n" : "# mean gradient magnitude in T/m\n");
    out << "d_um,entrance,upstream,+1D,+2D,+3D,+4D\n";
    out << std::setprecision(10);
    for (const auto& m : maps) {
        for (int u = 0; u < 4; ++u) {
            out << m.d_p * 1e6 << ',' << m.entrance << ",-" << u + 1 << 'D';
            for (int d = 0; d < 4; ++d) {
                out << ',';
                write_number(out, m.cells[layer][u][d]);
            }
            out << '\n';
        }
    }
}

std::vector<MedianRatioRow> median_ratio_table(const std::vector<ScenarioResult>& results) {
    std::vector<MedianRatioRow> rows;
    for (Factor f : {Factor::Diameter, Factor::Velocity, Factor::Entrance, Factor::UpstreamTarget}) {
        const auto groups = group_by(results, f);
        if (groups.empty()) continue;
        const auto& lo = *groups.begin();
        const auto& hi = *groups.rbegin();
        MedianRatioRow row{f, lo.first.second, hi.first.second, {}, {}, {}};
        for (int i = 0; i < 3; ++i) {
            const auto a = collect(lo.second, i, false);
            const auto b = collect(hi.second, i, false);
            row.at_min[i] = a.empty() ? std::nan("") : median_of(a);
            row.at_max[i] = b.empty() ? std::nan("") : median_of(b);
            row.ratio[i] = row.at_min[i] / row.at_max[i];
        }
        rows.push_back(row);
    }
    return rows;
}

void write_median_ratio_csv(std::ostream& out, const std::vector<MedianRatioRow>& rows) {
    out << "# medians in T/m; ratio = value at minimum level / value at maximum level\n";
    out << "factor,min_level,max_level,g1_min,g1_max,g1_ratio,g2_min,g2_max,g2_ratio,g3_min,g3_max,g3_ratio\n";
    out << std::setprecision(10);
    for (const auto& r : rows) {
        out << to_string(r.factor) << ',' << r.min_level << ',' << r.max_level;
        for (int i = 0; i < 3; ++i) out << ',' << r.at_min[i] << ',' << r.at_max[i] << ',' << r.ratio[i];
        out << '\n';
    }
}

DiameterMedians diameter_medians(const std::vector<ScenarioResult>& results) {
    DiameterMedians m;
    for (const auto& [key, rs] : group_by(results, Factor::Diameter)) {
        std::array<std::vector<double>, 3> v;
        for (int i = 0; i < 3; ++i) v[i] = collect(rs, i, false);
        if (std::any_of(v.begin(), v.end(), [](const auto& x) { return x.empty(); })) continue;
        m.d_p.push_back(key.first * 1e-6);
        for (int i = 0; i < 3; ++i) m.median[i].push_back(median_of(v[i]));
    }
    return m;
}

std::string_view to_string(FitBasis b) { return b == FitBasis::Inverse ? "inv" : "poly"; }

FitBasis parse_fit_basis(std::string_view s) {
    if (s == "inv" || s == "inverse") return FitBasis::Inverse;
    if (s == "poly") return FitBasis::Poly;
    throw ConfigError("unknown fit basis '" + std::string(s) + "' (expected inv or poly)");
}

namespace {

double basis_x(FitBasis b, double d_p) {
    const double d_um = d_p * 1e6;
    return b == FitBasis::Inverse ? 1.0 / d_um : d_um;
}

std::pair<std::array<double, 3>, double> solve_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit: x and y differ in length");
    std::set<double> distinct(x.begin(), x.end());
    if (distinct.size() < 3) throw std::invalid_argument("fit: need at least three distinct abscissae");
    Eigen::MatrixXd a(x.size(), 3);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = x[i];
        a(i, 2) = x[i] * x[i];
        b(i) = y[i];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 3) throw std::invalid_argument("fit: design matrix is rank deficient");
    const Eigen::Vector3d c = qr.solve(b);
    return {{c(0), c(1), c(2)}, (a * c - b).squaredNorm()};
}

// Tolerant comparison so grids read back from CSV still match.
bool same_scenario(const ScenarioSpec& a, const ScenarioSpec& b) {
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(std::abs(x), std::abs(y)); };
    return close(a.d_p, b.d_p) && a.artery == b.artery && close(a.vessel_offset, b.vessel_offset) &&
           close(a.u_max, b.u_max) && a.entrance == b.entrance && a.upstream_k == b.upstream_k &&
           a.downstream_k == b.downstream_k;
}

}  // namespace

std::array<double, 3> fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    return solve_quadratic(x, y).first;
}

double FitModel::predict(int region, double d_p) const {
    const double x = basis_x(basis, d_p);
    const auto& c = coefficients.at(region);
    return c[0] + x * (c[1] + x * c[2]);
}

FitModel fit_predictive_equations(const DiameterMedians& data, FitBasis basis) {
    FitModel m;
    m.basis = basis;
    m.data = data;
    std::vector<double> x;
    for (double d : data.d_p) x.push_back(basis_x(basis, d));
    for (int i = 0; i < 3; ++i) std::tie(m.coefficients[i], m.rss[i]) = solve_quadratic(x, data.median[i]);
    return m;
}

std::string fit_to_json(const FitModel& m) {
    nlohmann::ordered_json j;
    j["basis"] = to_string(m.basis);
    j["x"] = m.basis == FitBasis::Inverse ? "1/d_um" : "d_um";
    j["model"] = "G = c0 + c1*x + c2*x^2 (T/m)";
    std::vector<double> d_um;
    for (double d : m.data.d_p) d_um.push_back(std::round(d * 1e9) / 1e3);
    j["diameters_um"] = d_um;
    for (int i = 0; i < 3; ++i) {
        const std::string key = "G" + std::to_string(i + 1);
        j["regions"][key]["coefficients"] = m.coefficients[i];
        j["regions"][key]["rss"] = m.rss[i];
        j["regions"][key]["medians"] = m.data.median[i];
    }
    return j.dump(2) + "\n";
}

FitModel fit_from_json(const std::string& text, const std::string& origin) {
    try {
        const auto j = nlohmann::json::parse(text);
        FitModel m;
        m.basis = parse_fit_basis(j.at("basis").get<std::string>());
        for (double d : j.at("diameters_um").get<std::vector<double>>()) m.data.d_p.push_back(d * 1e-6);
        for (int i = 0; i < 3; ++i) {
            const auto& r = j.at("regions").at("G" + std::to_string(i + 1));
            m.coefficients[i] = r.at("coefficients").get<std::array<double, 3>>();
            m.rss[i] = r.value("rss", 0.0);
            if (r.contains("medians")) m.data.median[i] = r.at("medians").get<std::vector<double>>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

void save_fit(const std::filesystem::path& path, const FitModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << fit_to_json(model);
}

FitModel load_fit(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return fit_from_json(text.str(), path.string());
}

ConstantMode replay_mode(const FitModel& model, double d_p, bool gravity_compensation) {
    ConstantMode mode;
    mode.gravity_compensation = gravity_compensation;
    for (int i = 0; i < 3; ++i) mode.g[i] = std::max(0.0, model.predict(i, d_p));
    return mode;
}

ReplayReport replay_comparison(const std::vector<ScenarioResult>& dynamic_results,
                               const std::vector<ScenarioResult>& constant_results, const FitModel& model) {
    if (dynamic_results.size() != constant_results.size())
        throw std::invalid_argument("replay_comparison: result sets have different sizes");
    for (std::size_t i = 0; i < dynamic_results.size(); ++i)
        if (!same_scenario(dynamic_results[i].spec, constant_results[i].spec))
            throw std::invalid_argument("replay_comparison: scenario grids differ at row " + std::to_string(i));

    ReplayReport rep;
    rep.total = dynamic_results.size();
    rep.dynamic_success = navigation_success(dynamic_results);
    rep.constant_success = navigation_success(constant_results);

    std::map<double, std::size_t> fails;
    for (const auto& r : constant_results) {
        auto& n = fails[factor_level(r.spec, Factor::Diameter)];
        if (r.outcome != Outcome::Desired) ++n;
    }
    for (const auto& [d_um, n] : fails) rep.failures_by_diameter.emplace_back(d_um * 1e-6, n);

    const DiameterMedians med = diameter_medians(dynamic_results);
    for (std::size_t k = 0; k < med.d_p.size(); ++k) {
        ReplayReport::DiameterGap gap;
        gap.d_p = med.d_p[k];
        for (int i = 0; i < 3; ++i) {
            gap.dynamic[i] = med.median[i][k];
            gap.predicted[i] = model.predict(i, gap.d_p);
            gap.difference[i] = (gap.dynamic[i] - gap.predicted[i]) / gap.dynamic[i];
            rep.mean_difference[i] += std::abs(gap.difference[i]) / static_cast<double>(med.d_p.size());
        }
        rep.gaps.push_back(gap);
    }
    return rep;
}

void write_replay_report(std::ostream& out, const ReplayReport& rep) {
    out << std::setprecision(6);
    out << "scenarios: " << rep.total << '\n';
    out << "dynamic success: " << rep.dynamic_success << '\n';
    out << "constant success: " << rep.constant_success << '\n';
    out << "constant failures by diameter:";
    for (const auto& [d, n] : rep.failures_by_diameter) out << ' ' << d * 1e6 << "um=" << n;
    out << '\n';
    out << "mean |dynamic - predicted| / dynamic: G1 " << rep.mean_difference[0] << ", G2 " << rep.mean_difference[1]
        << ", G3 " << rep.mean_difference[2] << '\n';
}

void write_replay_csv(std::ostream& out, const ReplayReport& rep) {
    out << "# gradients in T/m; difference = (dynamic - predicted) / dynamic\n";
    out << "d_um,constant_failures";
    for (int i = 1; i <= 3; ++i) out << ",g" << i << "_dynamic,g" << i << "_predicted,g" << i << "_difference";
    out << '\n' << std::setprecision(10);
    for (const auto& g : rep.gaps) {
        std::size_t n = 0;
        for (const auto& [d, f] : rep.failures_by_diameter)
            if (std::abs(d - g.d_p) < 1e-12) n = f;
        out << g.d_p * 1e6 << ',' << n;
        for (int i = 0; i < 3; ++i) out << ',' << g.dynamic[i] << ',' << g.predicted[i] << ',' << g.difference[i];
        out << '\n';
    }
}

}  // namespace mbnav
