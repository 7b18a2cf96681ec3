#include "kgalign/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "kgalign/text.hpp"

namespace kgalign {

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

namespace {
constexpr std::array<char, 4> kMagic = {'K', 'G', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

double parse_double(std::string_view tok, const std::string& label, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError(label, line, "invalid number '" + std::string(tok) + "'");
  return v;
}
}  // namespace

MatrixFormat parse_matrix_format(const std::string& name) {
  if (name == "tsv") return MatrixFormat::tsv;
  if (name == "bin" || name == "binary") return MatrixFormat::binary;
  throw ArgumentError("unknown matrix format '" + name + "' (expected tsv or bin)");
}

void write_matrix_tsv(const MatrixXd& m, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index r = 0; r < m.rows(); ++r) {
    out << r;
    for (Index c = 0; c < m.cols(); ++c) out << '\t' << m(r, c);
    out << '\n';
  }
}

MatrixXd read_matrix_tsv(std::istream& in, const std::string& label) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    const auto idx = parse_double(toks[0], label, lineno);
    if (idx != static_cast<double>(rows.size()))
      throw ParseError(label, lineno, "row index out of sequence");
    std::vector<double> row;
    row.reserve(toks.size() - 1);
    for (std::size_t k = 1; k < toks.size(); ++k) row.push_back(parse_double(toks[k], label, lineno));
    if (rows.empty()) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw ParseError(label, lineno,
                       "expected " + std::to_string(cols) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

void write_matrix_binary(const MatrixXd& m, std::ostream& out) {
  const auto rows = static_cast<std::uint64_t>(m.rows());
  const auto cols = static_cast<std::uint64_t>(m.cols());
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

MatrixXd read_matrix_binary(std::istream& in, const std::string& label) {
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || magic != kMagic) throw ParseError(label, 0, "not a binary matrix file");
  if (version != kVersion) throw ParseError(label, 0, "unsupported matrix version");
  MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!in) throw ParseError(label, 0, "truncated matrix payload");
  return m;
}

void save_matrix(const MatrixXd& m, const std::filesystem::path& path, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (format == MatrixFormat::binary) {
    write_matrix_binary(m, out);
  } else {
    write_matrix_tsv(m, out);
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

MatrixXd load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 4 && head == kMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_matrix_binary(in, path.string()) : read_matrix_tsv(in, path.string());
}

}  // namespace kgalign
