// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

// Plain-text "key = value" configuration, one key per line, '#' comments.
namespace physmamba::config {

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Raises ConfigError naming source and line on malformed or duplicate keys.
std::vector<Entry> parse(const std::string& text, const std::string& source = "<config>");
/// Raises IoError if the file cannot be read.
std::string read_text(const std::filesystem::path& path);

using Setter = std::function<void(const std::string& value)>;
using SetterMap = std::map<std::string, Setter>;

/// Applies every entry through its setter; unknown keys and bad values raise ConfigError.
void apply(const std::vector<Entry>& entries, const SetterMap& setters, const std::string& source = "<config>");

double to_double(const std::string& value);
std::size_t to_size(const std::string& value);
std::uint64_t to_u64(const std::string& value);
bool to_bool(const std::string& value);
/// Comma-separated list of numbers.
std::vector<double> to_doubles(const std::string& value);

}  // namespace physmamba::config
