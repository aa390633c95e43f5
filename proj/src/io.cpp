#include "mggan/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mggan {

void write_file_atomic(const std::filesystem::path& path, const std::string& data)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!os) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

NumericCsv read_numeric_csv(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    NumericCsv out;
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": empty CSV");
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) out.header.push_back(cell);
    }
    std::vector<double> values;
    Index n = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t cells = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            double v = 0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) throw Error(path.string() + ":" + std::to_string(line_no) + ": not a number");
            values.push_back(v);
            ++cells;
            p = next;
            if (p == end) break;
            if (*p != ',') throw Error(path.string() + ":" + std::to_string(line_no) + ": expected ','");
            ++p;
        }
        if (cells != out.header.size())
            throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(out.header.size()) + " columns");
        ++n;
    }
    out.rows = MatrixD(n, static_cast<Index>(out.header.size()));
    for (Index i = 0; i < out.rows.size(); ++i) out.rows.data()[i] = values[static_cast<std::size_t>(i)];
    return out;
}

std::string numeric_csv(const std::vector<std::string>& header, const MatrixD& rows)
{
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
    for (Index i = 0; i < rows.rows(); ++i) {
        for (Index j = 0; j < rows.cols(); ++j) {
            if (j) out += ',';
            out += format_double(rows(i, j));
        }
        out += '\n';
    }
    return out;
}

} // namespace mggan
