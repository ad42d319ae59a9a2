#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qstirap/hamiltonian.hpp"

namespace qstirap::cli {

/// Bad command line, config file, or missing required parameter (exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat "section.key -> value" configuration. Values accumulate in order:
/// preset, then config file, then command-line overrides; later wins.
class RunConfig {
  public:
    static std::vector<std::string> preset_names();
    /// Parameter sets of the bundled figure presets, one place only.
    void apply_preset(const std::string& name);
    /// "[section]" headers plus "key = value" lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    /// key either "section.key" or with an explicit "section.key=value" form.
    void set(const std::string& key, const std::string& value);
    void set_kv(const std::string& key_equals_value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

    int require_int(const std::string& key) const;
    double require_double(const std::string& key) const;

    /// Model section; requires model.N.
    ModelParams model_params() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

std::vector<double> parse_double_list(const std::string& text, const std::string& key);

}  // namespace qstirap::cli
