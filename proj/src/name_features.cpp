#include "kgalign/name_features.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "kgalign/parallel.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

bool WordVectorTable::add(std::string_view token, const VectorXd& v) {
  if (token.empty()) throw ArgumentError("word vector token must be nonempty");
  if (dim_ == 0 && tokens_.empty()) dim_ = v.size();
  if (v.size() != dim_)
    throw ArgumentError("vector for '" + std::string(token) + "' has dimension " +
                        std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  if (index_.contains(std::string(token))) return false;
  index_.emplace(std::string(token), size());
  tokens_.emplace_back(token);
  data_.insert(data_.end(), v.data(), v.data() + v.size());
  return true;
}

const double* WordVectorTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return nullptr;
  return data_.data() + it->second * dim_;
}

namespace {

bool parse_int(std::string_view tok, long long& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

WordVectorTable read_word_vectors(std::istream& in, const std::string& label) {
  WordVectorTable table;
  std::string line;
  std::size_t lineno = 0;
  long long header_dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto toks = split_ws(line);
    long long count = 0;
    long long dim = 0;
    if (table.size() == 0 && header_dim < 0 && toks.size() == 2 && parse_int(toks[0], count) &&
        parse_int(toks[1], dim)) {
      if (dim < 1) throw ParseError(label, lineno, "header dimension must be positive");
      header_dim = dim;
      continue;
    }
    if (toks.size() < 2) throw ParseError(label, lineno, "expected 'token v1 ... v_d'");
    const auto d = static_cast<Index>(toks.size() - 1);
    if (header_dim > 0 && d != header_dim)
      throw ParseError(label, lineno,
                       "dimension " + std::to_string(d) + " != header " + std::to_string(header_dim));
    if (table.size() > 0 && d != table.dim())
      throw ParseError(label, lineno,
                       "dimension " + std::to_string(d) + " != " + std::to_string(table.dim()));
    VectorXd v(d);
    for (Index k = 0; k < d; ++k) {
      const auto tok = toks[static_cast<std::size_t>(k + 1)];
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(label, lineno, "invalid number '" + std::string(tok) + "'");
    }
    table.add(toks[0], v);
  }
  if (table.size() == 0 && header_dim > 0) return WordVectorTable(header_dim);
  return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_word_vectors(in, path.string());
}

std::vector<std::string> tokenize_name(std::string_view name) {
  if (name.starts_with("http://") || name.starts_with("https://")) {
    const auto slash = name.find_last_of('/');
    if (slash != std::string_view::npos && slash + 1 < name.size()) name = name.substr(slash + 1);
  }
  std::string cleaned;
  cleaned.reserve(name.size());
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::ispunct(c) || std::isspace(c))) {
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  std::vector<std::string> tokens;
  for (auto tok : split_ws(cleaned)) tokens.emplace_back(tok);
  return tokens;
}

NameEmbedding name_embedding(std::string_view name, const WordVectorTable& table) {
  NameEmbedding out{VectorXd::Zero(table.dim()), true};
  int hits = 0;
  for (const auto& tok : tokenize_name(name)) {
    if (const double* v = table.find(tok)) {
      out.vector += Eigen::Map<const VectorXd>(v, table.dim());
      ++hits;
    }
  }
  if (hits > 0) {
    out.vector /= static_cast<double>(hits);
    out.oov = false;
  }
  return out;
}

NameEmbeddingMatrix name_embeddings(const std::vector<std::string>& names,
                                    const WordVectorTable& table) {
  NameEmbeddingMatrix out{EmbeddingMatrix::Zero(static_cast<Index>(names.size()), table.dim()),
                          std::vector<bool>(names.size(), false)};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto e = name_embedding(names[i], table);
    out.rows.row(static_cast<Index>(i)) = e.vector.transpose();
    out.oov_mask[i] = e.oov;
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return edit_distance(utf8_decode(a), utf8_decode(b));
}

namespace {

double ratio_from(const std::u32string& a, const std::u32string& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

}  // namespace

double lev_ratio(std::string_view a, std::string_view b) {
  return ratio_from(utf8_decode(a), utf8_decode(b));
}

SimilarityMatrix string_sim_matrix(const std::vector<std::string>& src_names,
                                   const std::vector<std::string>& tgt_names) {
  if (src_names.empty() || tgt_names.empty())
    throw ArgumentError("string_sim_matrix needs nonempty name lists");
  std::vector<std::u32string> src;
  std::vector<std::u32string> tgt;
  for (const auto& s : src_names) src.push_back(utf8_decode(s));
  for (const auto& t : tgt_names) tgt.push_back(utf8_decode(t));
  SimilarityMatrix m(static_cast<Index>(src.size()), static_cast<Index>(tgt.size()),
                     FeatureTag::string);
  parallel_for(m.rows(), [&](Index i) {
    for (Index j = 0; j < m.cols(); ++j)
      m.scores(i, j) = ratio_from(src[static_cast<std::size_t>(i)], tgt[static_cast<std::size_t>(j)]);
  });
  return m;
}

}  // namespace kgalign
