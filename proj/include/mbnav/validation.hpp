#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mbnav {

struct CheckResult {
    std::string name;
    bool passed = false;
    double error = 0.0;      // worst observed deviation
    double tolerance = 0.0;
    std::string detail;
};

/// Built-in oracle checks: Carreau closed form, inlet flux, exact step vs
/// fine RK4, settling velocity, gradient inverse identity, elastic
/// collisions and the grid-field file round trip.
std::vector<CheckResult> run_oracle_suite();

/// One line per check; returns true when all passed.
bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace mbnav
