#include "covkit/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace covkit {

static_assert(std::endian::native == std::endian::little,
              "binary chain files are little-endian; big-endian hosts are not supported");

namespace {

constexpr char kMagic[4] = {'C', 'V', 'K', 'B'};

bool parse_cell(std::string_view cell, double& out) {
    // trim spaces and a trailing CR from CRLF input
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() &&
           (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.remove_suffix(1);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);  // from_chars rejects a leading '+'
    if (cell.empty()) return false;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

void check_finite(const Eigen::MatrixXd& chain, const std::string& name) {
    for (Eigen::Index i = 0; i < chain.rows(); ++i)
        for (Eigen::Index j = 0; j < chain.cols(); ++j)
            if (!std::isfinite(chain(i, j)))
                throw IoError(name + ": non-finite value at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(j + 1));
}

}  // namespace

ChainFormat parse_format(std::string_view name) {
    if (name == "auto") return ChainFormat::Auto;
    if (name == "csv") return ChainFormat::Csv;
    if (name == "bin") return ChainFormat::Bin;
    throw ConfigError("unknown format '" + std::string(name) + "'; valid names: auto, csv, bin");
}

Eigen::MatrixXd load_chain_csv(std::istream& is, const std::string& name) {
    std::vector<double> values;
    Eigen::Index cols = -1;
    Eigen::Index row = 0;
    std::string line;
    bool first_data_line = true;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = split_row(line);
        std::vector<double> parsed(cells.size());
        bool all_numeric = true;
        for (size_t j = 0; j < cells.size(); ++j) {
            if (!parse_cell(cells[j], parsed[j])) {
                if (first_data_line) {
                    all_numeric = false;  // header row
                    break;
                }
                throw IoError(name + ": non-numeric cell at row " + std::to_string(row) +
                              ", column " + std::to_string(j + 1));
            }
        }
        if (!all_numeric) {
            first_data_line = false;
            continue;
        }
        first_data_line = false;
        if (cols == -1)
            cols = static_cast<Eigen::Index>(cells.size());
        else if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw IoError(name + ": ragged row " + std::to_string(row) + " (" +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(cols) + ")");
        values.insert(values.end(), parsed.begin(), parsed.end());
    }
    if (cols <= 0 || values.empty()) throw IoError(name + ": no numeric rows");
    const auto rows = static_cast<Eigen::Index>(values.size()) / cols;
    if (rows < 2) throw IoError(name + ": a chain needs at least 2 rows");
    Eigen::MatrixXd chain(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) chain(i, j) = values[static_cast<size_t>(i * cols + j)];
    check_finite(chain, name);
    return chain;
}

Eigen::MatrixXd load_chain_bin(std::istream& is, const std::string& name) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(name + ": not a binary chain file (bad magic)");
    std::uint64_t n = 0;
    std::uint32_t p = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    is.read(reinterpret_cast<char*>(&p), sizeof(p));
    if (!is) throw IoError(name + ": truncated header");
    if (n < 2 || p < 1 || n > (1ULL << 40) || p > (1U << 20))
        throw IoError(name + ": implausible dimensions n = " + std::to_string(n) +
                      ", p = " + std::to_string(p));
    Eigen::MatrixXd chain(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    // stored row-major
    std::vector<double> row(p);
    for (std::uint64_t i = 0; i < n; ++i) {
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double)) * p);
        if (!is) throw IoError(name + ": truncated at row " + std::to_string(i + 1));
        for (std::uint32_t j = 0; j < p; ++j)
            chain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    check_finite(chain, name);
    return chain;
}

namespace {

ChainFormat resolve(const std::string& path, ChainFormat format) {
    if (format != ChainFormat::Auto) return format;
    const auto dot = path.rfind('.');
    if (dot != std::string::npos && path.substr(dot) == ".bin") return ChainFormat::Bin;
    return ChainFormat::Csv;
}

}  // namespace

Eigen::MatrixXd load_chain(const std::string& path, ChainFormat format) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    if (resolve(path, format) == ChainFormat::Bin) return load_chain_bin(is, path);
    return load_chain_csv(is, path);
}

void save_chain_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& chain,
                    bool header) {
    char buf[40];
    if (header) {
        for (Eigen::Index j = 0; j < chain.cols(); ++j)
            os << (j ? ",y" : "y") << (j + 1);
        os << '\n';
    }
    for (Eigen::Index i = 0; i < chain.rows(); ++i) {
        for (Eigen::Index j = 0; j < chain.cols(); ++j) {
            const int len = std::snprintf(buf, sizeof(buf), "%.17g", chain(i, j));
            if (j) os << ',';
            os.write(buf, len);
        }
        os << '\n';
    }
}

void save_chain_bin(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& chain) {
    os.write(kMagic, 4);
    const auto n = static_cast<std::uint64_t>(chain.rows());
    const auto p = static_cast<std::uint32_t>(chain.cols());
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(&p), sizeof(p));
    std::vector<double> row(p);
    for (Eigen::Index i = 0; i < chain.rows(); ++i) {
        for (Eigen::Index j = 0; j < chain.cols(); ++j) row[static_cast<size_t>(j)] = chain(i, j);
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(sizeof(double)) * p);
    }
}

void save_chain(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& chain,
                ChainFormat format, bool csv_header) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    if (resolve(path, format) == ChainFormat::Bin)
        save_chain_bin(os, chain);
    else
        save_chain_csv(os, chain, csv_header);
    if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace covkit
