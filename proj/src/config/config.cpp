// SPDX-License-Identifier: Apache-2.0
#include "physmamba/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "physmamba/errors.hpp"

namespace physmamba::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& value) {
    T out{};
    const auto v = trim(value);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

}  // namespace

std::vector<Entry> parse(const std::string& text, const std::string& source) {
    std::vector<Entry> out;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line) + ": expected key = value");
        }
        Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
        if (e.key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
        if (!seen.insert(e.key).second) {
            throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + e.key + "'");
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void apply(const std::vector<Entry>& entries, const SetterMap& setters, const std::string& source) {
    for (const auto& e : entries) {
        const auto it = setters.find(e.key);
        if (it == setters.end()) {
            throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
        }
        try {
            it->second(e.value);
        } catch (const ConfigError& err) {
            throw ConfigError(source + ":" + std::to_string(e.line) + ": " + e.key + ": " + err.what());
        }
    }
}

double to_double(const std::string& value) {
    const auto v = trim(value);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw ConfigError("");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + value + "'");
    }
}

std::size_t to_size(const std::string& value) { return parse_integer<std::size_t>(value); }
std::uint64_t to_u64(const std::string& value) { return parse_integer<std::uint64_t>(value); }

bool to_bool(const std::string& value) {
    const auto v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("expected true or false, got '" + value + "'");
}

std::vector<double> to_doubles(const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_double(item));
    if (out.empty()) throw ConfigError("expected a comma-separated list of numbers");
    return out;
}

}  // namespace physmamba::config
