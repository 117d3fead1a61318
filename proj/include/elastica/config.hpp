#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace elastica {

// Small TOML reader covering what the scenario and training configs use:
// [tables], [[arrays of tables]], comments, and scalar values (strings,
// integers, floats, booleans) plus flat arrays of numbers. Keys are stored
// flattened as "table.key".
class Config {
public:
    using Scalar = std::variant<bool, std::int64_t, double, std::string>;
    using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;
    using Table = std::map<std::string, Value>;

    static Config parse(std::string_view text, const std::string& origin = "<string>");
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    const std::vector<Table>& table_array(const std::string& name) const;

    void set(const std::string& key, Value v) { values_[key] = std::move(v); }

    // Applies "key=value"; the value uses TOML scalar syntax, bare words are
    // taken as strings.
    void apply_override(std::string_view assignment);

    // Merges `other` on top of this config (other wins).
    void merge(const Config& other);

    // Deterministic rendering used for provenance hashes.
    std::string canonical() const;

    const std::map<std::string, Value>& values() const { return values_; }

private:
    std::map<std::string, Value> values_;
    std::map<std::string, std::vector<Table>> arrays_;
};

double table_double(const Config::Table& t, const std::string& key);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace elastica
