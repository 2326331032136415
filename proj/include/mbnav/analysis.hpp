#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbnav/sweep.hpp"

namespace mbnav {

struct BoxplotStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;  // ascending
};

/// Quantile of sorted data by linear interpolation at position p (n - 1).
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Quartiles by linear interpolation; whiskers at the most extreme points
/// inside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]. Throws std::invalid_argument when empty.
BoxplotStats boxplot_stats(std::vector<double> values);

double median_of(std::vector<double> values);

enum class Factor { Diameter, Artery, Velocity, Entrance, UpstreamTarget, DownstreamTarget };
std::string_view to_string(Factor f);

/// Level of `f` in a scenario: diameter in um, velocity in m/s, entrance
/// index, -k for upstream and +k for downstream targets. Artery has no
/// numeric level (0).
double factor_level(const ScenarioSpec& spec, Factor f);
std::string factor_label(const ScenarioSpec& spec, Factor f);

/// Per-scenario value used by the aggregate statistics: the region's mean
/// magnitude (T/m), or nothing when the region was never visited.
std::optional<double> region_value(const ScenarioResult& r, int region);
/// Commanded in-plane direction folded to [0, 180] degrees.
std::optional<double> region_angle_deg(const ScenarioResult& r, int region);

struct GroupStats {
    Factor factor;
    std::string level;
    std::array<BoxplotStats, 3> magnitude;  // T/m
    std::array<BoxplotStats, 3> angle;      // deg
};

/// Boxplot statistics of every level of `f`, in ascending level order.
std::vector<GroupStats> grouped_boxplots(const std::vector<ScenarioResult>& results, Factor f);
void write_boxplots_csv(std::ostream& out, const std::vector<GroupStats>& groups);

/// 4x4 tables over (upstream_k, downstream_k) for one diameter and entrance.
struct GradientMap {
    double d_p = 0.0;
    int entrance = 0;
    // [region 0..2, collisions = 3][upstream_k - 1][downstream_k - 1]
    std::array<std::array<std::array<std::optional<double>, 4>, 4>, 4> cells;
};

std::vector<GradientMap> gradient_maps(const std::vector<ScenarioResult>& results, const std::string& artery,
                                       double u_max);
/// `layer` 0..2 for G1..G3, 3 for collisions. One row per (diameter,
/// entrance, upstream target); empty cells stay blank.
void write_map_csv(std::ostream& out, const std::vector<GradientMap>& maps, int layer);

struct MedianRatioRow {
    Factor factor;
    std::string min_level;
    std::string max_level;
    std::array<double, 3> at_min{};
    std::array<double, 3> at_max{};
    std::array<double, 3> ratio{};  // at_min / at_max
};

/// Medians at the lowest and highest level of diameter, velocity, entrance
/// and upstream target.
std::vector<MedianRatioRow> median_ratio_table(const std::vector<ScenarioResult>& results);
void write_median_ratio_csv(std::ostream& out, const std::vector<MedianRatioRow>& rows);

/// Median of the per-scenario region values for each diameter.
struct DiameterMedians {
    std::vector<double> d_p;                    // m, ascending
    std::array<std::vector<double>, 3> median;  // T/m
};
DiameterMedians diameter_medians(const std::vector<ScenarioResult>& results);

enum class FitBasis { Inverse, Poly };  // {1, 1/d, 1/d^2} or {1, d, d^2}, d in um
std::string_view to_string(FitBasis b);
FitBasis parse_fit_basis(std::string_view s);

struct FitModel {
    FitBasis basis = FitBasis::Inverse;
    std::array<std::array<double, 3>, 3> coefficients{};  // [region][power]
    std::array<double, 3> rss{};
    DiameterMedians data;

    /// Predicted gradient (T/m) for `region` 0..2 at diameter d_p (m).
    double predict(int region, double d_p) const;
};

/// Least squares by column-pivoted QR. Throws std::invalid_argument when
/// fewer than three distinct diameters are given.
FitModel fit_predictive_equations(const DiameterMedians& data, FitBasis basis = FitBasis::Inverse);
/// Least-squares coefficients of {1, x, x^2} for arbitrary samples.
std::array<double, 3> fit_quadratic(const std::vector<double>& x, const std::vector<double>& y);

void save_fit(const std::filesystem::path& path, const FitModel& model);
FitModel load_fit(const std::filesystem::path& path);
std::string fit_to_json(const FitModel& model);
FitModel fit_from_json(const std::string& text, const std::string& origin = "<string>");

/// Constant-gradient controller for one scenario: the fitted G1..G3 at its
/// diameter, clamped at zero.
ConstantMode replay_mode(const FitModel& model, double d_p, bool gravity_compensation = true);

struct ReplayReport {
    double dynamic_success = 0.0;
    double constant_success = 0.0;
    std::size_t total = 0;
    std::vector<std::pair<double, std::size_t>> failures_by_diameter;  // (d_p m, constant-mode failures)
    struct DiameterGap {
        double d_p = 0.0;
        std::array<double, 3> dynamic{};    // median of the dynamic run
        std::array<double, 3> predicted{};  // fit prediction
        std::array<double, 3> difference{}; // (dynamic - predicted) / dynamic
    };
    std::vector<DiameterGap> gaps;
    std::array<double, 3> mean_difference{};  // mean |difference| over diameters
};

/// Compares a dynamic sweep with its constant-gradient replay on the same
/// grid. Throws std::invalid_argument when the grids differ.
ReplayReport replay_comparison(const std::vector<ScenarioResult>& dynamic_results,
                               const std::vector<ScenarioResult>& constant_results, const FitModel& model);
void write_replay_report(std::ostream& out, const ReplayReport& report);
void write_replay_csv(std::ostream& out, const ReplayReport& report);

}  // namespace mbnav
