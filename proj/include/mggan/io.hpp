#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mggan/tensor.hpp"

namespace mggan {

/// Writes `data` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);
std::string read_file(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

struct NumericCsv {
    std::vector<std::string> header;
    MatrixD rows;
};

/// Comma-separated numbers under a one-line header.
NumericCsv read_numeric_csv(const std::filesystem::path& path);
std::string numeric_csv(const std::vector<std::string>& header, const MatrixD& rows);

} // namespace mggan
