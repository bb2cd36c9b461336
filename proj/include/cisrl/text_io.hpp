#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cisrl {

// Formats a double with 17 significant digits, enough to round-trip exactly.
std::string format_full(double v);

std::string join_csv(const std::vector<std::string>& fields);

// key=value file with '#' comments and blank lines. Order preserved in `keys`.
struct KeyValueFile {
    std::map<std::string, std::string> values;
    std::vector<std::string> keys;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
};

KeyValueFile parse_key_value_text(const std::string& text, const std::string& origin);
KeyValueFile load_key_value_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a, used to fingerprint shared initial-state lists in logs.
uint64_t fnv1a(const void* data, size_t len);

std::vector<std::string> split_whitespace(const std::string& line);

} // namespace cisrl
