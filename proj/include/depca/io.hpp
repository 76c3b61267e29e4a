#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace depca {

/// Shortest-faithful decimal form ("%.12g"); locale-independent, so repeated
/// runs emit byte-identical artifacts.
std::string format_double(double v);

/// Minimal CSV assembly: header row plus value rows, '\n' line ends,
/// '.' decimal separator.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);
    void numeric_row(std::initializer_list<double> cells);

    const std::string& str() const { return out_; }
    void write(const std::string& path) const;

private:
    size_t columns_;
    std::string out_;
};

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// Two-space-indented dump with sorted keys and a trailing newline.
std::string json_dump(const nlohmann::json& j);

}  // namespace depca
