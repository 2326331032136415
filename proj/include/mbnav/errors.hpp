#pragma once

#include <stdexcept>
#include <string>

namespace mbnav {

/// Inconsistent or invalid run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (grid field, config, CSV, fit JSON).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mbnav
