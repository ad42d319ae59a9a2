#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qstirap/common.hpp"

namespace qstirap {

/// %.12g rendering used for every floating-point value we write.
std::string format_value(double v);

/// CSV with '#'-prefixed header comments carrying the full parameter set.
class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path);

    void comment(const std::string& line);
    /// One "# key = value" line per entry, in map (sorted) order.
    void parameters(const std::map<std::string, std::string>& params);
    void columns(std::span<const std::string> names);
    void row(std::span<const double> values);

  private:
    std::ofstream out_;
};

}  // namespace qstirap
