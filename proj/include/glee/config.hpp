#pragma once

// Flat key=value configuration: '#' comments, blank lines ignored, values
// keep everything after the first '='. The canonical form (sorted keys) is
// hashed so outputs can be matched to the exact configuration that produced
// them.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace glee {

std::uint64_t fnv1a64(std::string_view s);

class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    // Getters throw ConfigError naming the key on missing value or bad parse.
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma-separated list; empty when the key is absent.
    std::vector<std::string> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    // Sorted "key=value" lines.
    std::string canonical() const;
    std::uint64_t hash() const { return fnv1a64(canonical()); }
    std::string hash_hex() const;

    // ConfigError naming the first unknown key.
    void require_known(const std::set<std::string>& known) const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace glee
