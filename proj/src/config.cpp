#include "elastica/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elastica/errors.hpp"

namespace elastica {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Strips a trailing comment that is not inside a string literal.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(std::string_view s, Config::Value& out) {
    std::string clean;
    for (char c : s) {
        if (c != '_') clean.push_back(c);
    }
    if (clean.empty()) return false;
    const bool looks_float = clean.find_first_of(".eE") != std::string::npos ||
                             clean == "inf" || clean == "+inf" || clean == "-inf" || clean == "nan";
    const char* first = clean.data();
    const char* last = clean.data() + clean.size();
    if (*first == '+') ++first;
    if (!looks_float) {
        std::int64_t v = 0;
        auto res = std::from_chars(first, last, v);
        if (res.ec == std::errc() && res.ptr == last) {
            out = v;
            return true;
        }
        return false;
    }
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec == std::errc() && res.ptr == last) {
        out = v;
        return true;
    }
    return false;
}

Config::Value parse_value(std::string_view raw, const std::string& where, bool bare_is_string) {
    const auto s = trim(raw);
    if (s.empty()) throw UsageError(where + ": missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') throw UsageError(where + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            char c = s[i];
            if (c == '\\' && i + 2 < s.size()) {
                const char n = s[++i];
                switch (n) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    default: c = n; break;
                }
            }
            out.push_back(c);
        }
        return out;
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw UsageError(where + ": unterminated array");
        std::vector<double> items;
        auto body = s.substr(1, s.size() - 2);
        while (!trim(body).empty()) {
            const auto comma = body.find(',');
            const auto item = trim(body.substr(0, comma));
            if (!item.empty()) {
                Config::Value v;
                if (!parse_number(item, v)) throw UsageError(where + ": arrays must hold numbers");
                items.push_back(std::holds_alternative<double>(v)
                                    ? std::get<double>(v)
                                    : static_cast<double>(std::get<std::int64_t>(v)));
            }
            if (comma == std::string_view::npos) break;
            body = body.substr(comma + 1);
        }
        return items;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    Config::Value v;
    if (parse_number(s, v)) return v;
    if (bare_is_string) return std::string(s);
    throw UsageError(where + ": cannot parse value '" + std::string(s) + "'");
}

std::string render(const Config::Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(x);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return "\"" + x + "\"";
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (i) out += ",";
                    out += format_double(x[i]);
                }
                return out + "]";
            }
        },
        v);
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
    Config cfg;
    std::string prefix;
    Table* current_array_item = nullptr;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.substr(0, 2) == "[[") {
            if (line.size() < 4 || line.substr(line.size() - 2) != "]]") {
                throw UsageError(where + ": malformed array-of-tables header");
            }
            const std::string name(trim(line.substr(2, line.size() - 4)));
            auto& arr = cfg.arrays_[name];
            arr.emplace_back();
            current_array_item = &arr.back();
            prefix.clear();
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw UsageError(where + ": malformed table header");
            prefix = std::string(trim(line.substr(1, line.size() - 2))) + ".";
            current_array_item = nullptr;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw UsageError(where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw UsageError(where + ": empty key");
        auto value = parse_value(line.substr(eq + 1), where, false);
        if (current_array_item) {
            (*current_array_item)[key] = std::move(value);
        } else {
            cfg.values_[prefix + key] = std::move(value);
        }
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto d = std::get_if<double>(&it->second)) return *d;
    if (auto i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    throw UsageError("config field '" + key + "' must be a number");
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto i = std::get_if<std::int64_t>(&it->second)) return *i;
    if (auto d = std::get_if<double>(&it->second)) {
        if (*d == static_cast<double>(static_cast<std::int64_t>(*d))) return static_cast<std::int64_t>(*d);
    }
    throw UsageError("config field '" + key + "' must be an integer");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto b = std::get_if<bool>(&it->second)) return *b;
    throw UsageError("config field '" + key + "' must be a boolean");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto s = std::get_if<std::string>(&it->second)) return *s;
    throw UsageError("config field '" + key + "' must be a string");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto v = std::get_if<std::vector<double>>(&it->second)) return *v;
    throw UsageError("config field '" + key + "' must be an array of numbers");
}

const std::vector<Config::Table>& Config::table_array(const std::string& name) const {
    static const std::vector<Table> empty;
    auto it = arrays_.find(name);
    return it == arrays_.end() ? empty : it->second;
}

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw UsageError("override '" + std::string(assignment) + "' must be key=value");
    }
    const std::string key(trim(assignment.substr(0, eq)));
    if (key.empty()) throw UsageError("override '" + std::string(assignment) + "' has an empty key");
    values_[key] = parse_value(assignment.substr(eq + 1), "--set " + key, true);
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
    for (const auto& [k, v] : other.arrays_) arrays_[k] = v;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + render(v) + "\n";
    for (const auto& [name, items] : arrays_) {
        for (const auto& item : items) {
            out += "[[" + name + "]]\n";
            for (const auto& [k, v] : item) out += k + "=" + render(v) + "\n";
        }
    }
    return out;
}

double table_double(const Config::Table& t, const std::string& key) {
    auto it = t.find(key);
    if (it == t.end()) throw UsageError("missing field '" + key + "'");
    if (auto d = std::get_if<double>(&it->second)) return *d;
    if (auto i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    throw UsageError("field '" + key + "' must be a number");
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace elastica
