#pragma once

// YAML experiment files, flattened to dotted keys.
//
//   # comment
//   schema_version: 1
//   kind: sweep
//   warp:
//     family: degenerate_bump
//     m: 2
//   sweep:
//     h_list: [1/50, 1/100, 1/200]
//
// Nested maps become "warp.family", "sweep.h_list" and so on. Sequences are kept as
// comma-joined text for get_list. Every value keeps its 1-based line number so errors
// can point back into the file.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "error.hpp"

namespace semires {

struct ConfigValue {
    std::string text;
    int line = 0;
};

class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "config") {
        Config c;
        c.source_ = source;
        YAML::Node root;
        try {
            root = YAML::Load(in);
        } catch (const YAML::Exception& e) {
            throw c.error(e.mark.line + 1, e.msg);
        }
        if (!root || root.IsNull()) return c;
        if (!root.IsMap()) throw c.error(line_of(root), "top level must be a mapping of keys to values");
        c.flatten(root, "");
        return c;
    }

    static Config parse_string(const std::string& text, const std::string& source = "config") {
        std::istringstream is(text);
        return parse(is, source);
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError(path + ": cannot open");
        return parse(f, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
    int line_of(const std::string& key) const {
        auto it = values_.find(key);
        return it == values_.end() ? 0 : it->second.line;
    }
    const std::map<std::string, ConfigValue>& values() const { return values_; }
    const std::string& source() const { return source_; }

    void set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second.text;
    }
    std::string require_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return it->second.text;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(it->second, key);
    }
    double require_double(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return to_double(it->second, key);
    }
    int get_int(const std::string& key, int fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const double v = to_double(it->second, key);
        if (v != static_cast<double>(static_cast<long long>(v)))
            throw error(it->second.line, "'" + key + "' must be an integer");
        return static_cast<int>(v);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::string t = lower(it->second.text);
        if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
        if (t == "false" || t == "no" || t == "0" || t == "off") return false;
        throw error(it->second.line, "'" + key + "' must be true or false");
    }
    std::vector<double> get_list(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        std::vector<double> out;
        std::stringstream ss(it->second.text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (item.empty()) throw error(it->second.line, "empty entry in list '" + key + "'");
            out.push_back(to_double({item, it->second.line}, key));
        }
        return out;
    }

    ConfigError error(int line, const std::string& msg) const {
        return ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    /// Keys present in the file but absent from `known`.
    std::vector<std::string> unknown_keys(const std::set<std::string>& known) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!known.count(k)) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, ConfigValue> values_;
    std::map<std::string, int> sections_;
    std::string source_;

    static int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

    void flatten(const YAML::Node& map, const std::string& prefix) {
        for (const auto& kv : map) {
            const int line = line_of(kv.first);
            if (!kv.first.IsScalar()) throw error(line, "invalid key");
            const std::string key = kv.first.Scalar();
            if (key.empty() || !valid_name(key)) throw error(line, "invalid key '" + key + "'");
            const std::string full = prefix.empty() ? key : prefix + "." + key;
            const YAML::Node& v = kv.second;
            if (v.IsMap()) {
                if (sections_.count(full)) throw error(line, "duplicate section '" + full + "'");
                sections_[full] = line;
                flatten(v, full);
                continue;
            }
            if (values_.count(full) || sections_.count(full)) throw error(line, "duplicate key '" + full + "'");
            std::string text;
            if (v.IsScalar()) {
                text = v.Scalar();
            } else if (v.IsSequence()) {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (!v[i].IsScalar()) throw error(line_of(v[i]), "'" + full + "' entries must be scalars");
                    if (i) text += ", ";
                    text += v[i].Scalar();
                }
                if (v.size() == 0) throw error(line, "empty list '" + full + "'");
            } else if (!v.IsNull()) {
                throw error(line, "unsupported value for '" + full + "'");
            }
            values_[full] = {text, line};
        }
    }

    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
    static std::string lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    }
    static bool valid_name(const std::string& s) {
        return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.'; });
    }
    double to_double(const ConfigValue& v, const std::string& key) const {
        const std::string t = lower(v.text);
        if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
        double out = 0.0;
        const char* b = v.text.data();
        const char* e = b + v.text.size();
        auto [p, ec] = std::from_chars(b, e, out);
        if (ec != std::errc() || p != e) {
            // allow simple fractions such as 1/50
            const auto slash = v.text.find('/');
            if (slash != std::string::npos) {
                double num = 0.0, den = 0.0;
                const std::string n = strip(v.text.substr(0, slash)), d = strip(v.text.substr(slash + 1));
                auto r1 = std::from_chars(n.data(), n.data() + n.size(), num);
                auto r2 = std::from_chars(d.data(), d.data() + d.size(), den);
                if (r1.ec == std::errc() && r1.ptr == n.data() + n.size() && r2.ec == std::errc() &&
                    r2.ptr == d.data() + d.size() && den != 0.0)
                    return num / den;
            }
            throw error(v.line, "'" + key + "' expects a number, got '" + v.text + "'");
        }
        return out;
    }
};

} // namespace semires
