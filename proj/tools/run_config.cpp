#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace qstirap::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

// The paper-figure parameter sets, encoded exactly once. Scan grids use the
// 1/33 lattice so the quoted t~ values are exact grid points.
const std::map<std::string, std::map<std::string, std::string>>& preset_table() {
    static const std::map<std::string, std::map<std::string, std::string>> table = {
        {"fig1",
         {{"model.N", "20"},
          {"model.g_c", "0.1"},
          {"grid.start", "0"},
          {"grid.end", "6.0606"},
          {"grid.points", "201"}}},
        {"fig2",
         {{"model.N", "20"},
          {"model.g_c", "0.2"},
          {"grid.start", "0"},
          {"grid.end", "6.0606"},
          {"grid.points", "201"}}},
        {"fig3a",
         {{"model.N", "20"},
          {"model.g_c", "0.2"},
          {"lyapunov.t_values", "2.5758,2.7879,3.0303"},
          {"lyapunov.resets", "20000"},
          {"lyapunov.warmup", "1000"},
          {"lyapunov.window_start", "2.0"},
          {"lyapunov.window_end", "3.6061"},
          {"lyapunov.window_points", "54"},
          {"lyapunov.window_resets", "30000"},
          {"lyapunov.window_warmup", "2000"}}},
        {"fig3b",
         {{"model.N", "20"},
          {"model.g_c", "0.2"},
          {"otoc.t_values", "2.5758,2.7879,3.0303,2.7273"},
          {"otoc.kt_max", "50"},
          {"otoc.points", "500"}}},
        {"fig4",
         {{"model.N", "20"},
          {"purity.g_values", "0,0.1,0.2"},
          {"purity.start", "2.0"},
          {"purity.end", "3.6061"},
          {"purity.points", "107"}}},
        {"fig5",
         {{"model.N", "20"},
          {"model.g_c", "0.2"},
          {"sweep.rate", "0.003"},
          {"sweep.start", "0"},
          {"sweep.end", "6.0606"}}},
        {"fig6a",
         {{"efficiency.n_min", "1"},
          {"efficiency.n_max", "14"},
          {"efficiency.rates", "0.0606,0.0152,0.003,0.0015"}}},
    };
    return table;
}

}  // namespace

std::vector<std::string> RunConfig::preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, values] : preset_table()) names.push_back(name);
    return names;
}

void RunConfig::apply_preset(const std::string& name) {
    const auto it = preset_table().find(name);
    if (it == preset_table().end()) {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw UsageError("unknown preset '" + name + "' (available: " + known + ")");
    }
    for (const auto& [key, value] : it->second) values_[key] = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError(path.string() + ":" + std::to_string(lineno) +
                                 ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path.string() + ":" + std::to_string(lineno) +
                             ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        values_[section.empty() ? key : section + "." + key] = value;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

void RunConfig::set_kv(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw UsageError("--set expects section.key=value, got '" + key_equals_value + "'");
    values_[trim(key_equals_value.substr(0, eq))] = trim(key_equals_value.substr(eq + 1));
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int RunConfig::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw UsageError("parameter " + key + " expects an integer, got '" + it->second + "'");
    }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw UsageError("parameter " + key + " expects a number, got '" + it->second + "'");
    }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("parameter " + key + " expects a boolean, got '" + it->second + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double_list(it->second, key);
}

int RunConfig::require_int(const std::string& key) const {
    if (!has(key))
        throw UsageError("missing required parameter: " + key +
                         " (provide via --preset, --config, or --set " + key + "=...)");
    return get_int(key, 0);
}

double RunConfig::require_double(const std::string& key) const {
    if (!has(key))
        throw UsageError("missing required parameter: " + key +
                         " (provide via --preset, --config, or --set " + key + "=...)");
    return get_double(key, 0.0);
}

ModelParams RunConfig::model_params() const {
    ModelParams p;
    p.N = require_int("model.N");
    p.K = get_double("model.K", 1.0);
    p.delta = get_double("model.delta", 0.5);
    p.g_c = get_double("model.g_c", 0.0);
    p.pulse_amp = get_double("model.pulse_amp", 1.0);
    p.t1 = get_double("model.t1", 3.697);
    p.t2 = get_double("model.t2", 2.4242);
    p.basis_cap = get_int("model.basis_cap", kDefaultBasisCap);
    return p;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("parameter " + key + " expects a comma-separated number list");
        }
    }
    if (out.empty()) throw UsageError("parameter " + key + " is an empty list");
    return out;
}

}  // namespace qstirap::cli
