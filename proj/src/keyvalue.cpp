#include "mbnav/keyvalue.hpp"

#include <fstream>
#include <sstream>

#include "mbnav/errors.hpp"

namespace mbnav {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!kv.values_.emplace(key, value).second)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> KeyValueFile::get_double(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(origin_ + ": key '" + key + "' is not a number: '" + *v + "'");
    }
}

std::optional<int> KeyValueFile::get_int(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    try {
        std::size_t used = 0;
        const int i = std::stoi(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return i;
    } catch (const std::exception&) {
        throw ParseError(origin_ + ": key '" + key + "' is not an integer: '" + *v + "'");
    }
}

std::optional<bool> KeyValueFile::get_bool(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    if (*v == "on" || *v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "off" || *v == "false" || *v == "0" || *v == "no") return false;
    throw ParseError(origin_ + ": key '" + key + "' is not a boolean: '" + *v + "'");
}

}  // namespace mbnav
