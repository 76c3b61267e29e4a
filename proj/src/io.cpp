#include "depca/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "depca/errors.hpp"

namespace depca {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    if (header.empty()) throw ConfigError("CsvWriter: empty header");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw ConfigError("CsvWriter: row width does not match header");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
}

void CsvWriter::numeric_row(std::initializer_list<double> cells) {
    std::vector<std::string> formatted;
    formatted.reserve(cells.size());
    for (double v : cells) formatted.push_back(format_double(v));
    row(formatted);
}

void CsvWriter::write(const std::string& path) const { write_text(path, out_); }

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << content;
    if (!f) throw ConfigError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string json_dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace depca
