#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace mbnav {

/// Flat `key = value` text file. `#` starts a comment, blank lines are
/// ignored, keys are case-sensitive and may not repeat.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueFile load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;
    std::optional<int> get_int(const std::string& key) const;
    std::optional<bool> get_bool(const std::string& key) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

}  // namespace mbnav
