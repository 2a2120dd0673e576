#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "covkit/errors.hpp"

namespace covkit {

enum class ChainFormat { Auto, Csv, Bin };

ChainFormat parse_format(std::string_view name);  // "auto", "csv", "bin"

// CSV: UTF-8, comma separated, '.' decimal, LF line endings, one row per
// iteration; a non-numeric first row is treated as a header and skipped.
// Binary: 16-byte header (magic "CVKB", u64 n, u32 p, little endian)
// followed by n*p float64 values in row-major order.
//
// Auto resolves by extension (".bin" => binary, else CSV).  Ragged rows,
// non-numeric cells, NaN/Inf values and truncated binaries are rejected
// with the offending location in the message.
Eigen::MatrixXd load_chain(const std::string& path, ChainFormat format = ChainFormat::Auto);
Eigen::MatrixXd load_chain_csv(std::istream& is, const std::string& name = "<stream>");
Eigen::MatrixXd load_chain_bin(std::istream& is, const std::string& name = "<stream>");

void save_chain(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& chain,
                ChainFormat format = ChainFormat::Auto, bool csv_header = false);
void save_chain_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& chain,
                    bool header = false);
void save_chain_bin(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& chain);

}  // namespace covkit
