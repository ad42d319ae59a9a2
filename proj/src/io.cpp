#include "qstirap/io.hpp"

#include <cstdio>

namespace qstirap {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw NumericError("CsvWriter: cannot open " + path.string());
}

void CsvWriter::comment(const std::string& line) { out_ << "# " << line << "\n"; }

void CsvWriter::parameters(const std::map<std::string, std::string>& params) {
    for (const auto& [key, value] : params) out_ << "# " << key << " = " << value << "\n";
}

void CsvWriter::columns(std::span<const std::string> names) {
    for (std::size_t i = 0; i < names.size(); ++i)
        out_ << names[i] << (i + 1 < names.size() ? "," : "\n");
}

void CsvWriter::row(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << format_value(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

}  // namespace qstirap
