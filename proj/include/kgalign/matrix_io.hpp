// Shared dense-matrix file format for embeddings and similarity matrices.
//
// TSV:    one row per line, `row_index<TAB>v1<TAB>...<TAB>v_d`, values printed
//         with 17 significant digits so a round trip is exact.
// Binary: "KGAM" magic, uint32 version (1), uint64 rows, uint64 cols, then
//         rows*cols little-endian IEEE-754 doubles in row-major order.
#ifndef KGALIGN_MATRIX_IO_HPP_
#define KGALIGN_MATRIX_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kgalign/types.hpp"

namespace kgalign {

enum class MatrixFormat { tsv, binary };

MatrixFormat parse_matrix_format(const std::string& name);  // "tsv" | "bin"

void write_matrix_tsv(const MatrixXd& m, std::ostream& out);
MatrixXd read_matrix_tsv(std::istream& in, const std::string& label = "<matrix>");

void write_matrix_binary(const MatrixXd& m, std::ostream& out);
MatrixXd read_matrix_binary(std::istream& in, const std::string& label = "<matrix>");

void save_matrix(const MatrixXd& m, const std::filesystem::path& path, MatrixFormat format);
/// Detects the format from the leading magic bytes.
MatrixXd load_matrix(const std::filesystem::path& path);

}  // namespace kgalign

#endif  // KGALIGN_MATRIX_IO_HPP_
