// Entity-name features: averaged word embeddings and Levenshtein ratios.
#ifndef KGALIGN_NAME_FEATURES_HPP_
#define KGALIGN_NAME_FEATURES_HPP_

#include <algorithm>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgalign/simmat.hpp"
#include "kgalign/types.hpp"

namespace kgalign {

/// token -> d_w vector, loaded from a fastText-style `.vec` text file.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(Index dim) : dim_(dim) {}

  /// Later duplicates of a token are ignored. Throws ArgumentError on a
  /// dimension mismatch or an empty token.
  bool add(std::string_view token, const VectorXd& v);

  Index dim() const { return dim_; }
  Index size() const { return static_cast<Index>(tokens_.size()); }
  /// Tokens in insertion order.
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// nullptr when the token is out of vocabulary.
  const double* find(std::string_view token) const;

 private:
  Index dim_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Index> index_;
  std::vector<double> data_;  // size() x dim(), row-major
};

/// Optional `count dim` header, then `token v1 ... v_dw` per line.
WordVectorTable load_word_vectors(const std::filesystem::path& path);
WordVectorTable read_word_vectors(std::istream& in, const std::string& label = "<vectors>");

/// Lowercases ASCII, turns ASCII punctuation and underscores into spaces and
/// splits on whitespace. A URI keeps only its last path segment.
std::vector<std::string> tokenize_name(std::string_view name);

struct NameEmbedding {
  VectorXd vector;
  bool oov = false;  // no in-vocabulary token; vector is zero
};

NameEmbedding name_embedding(std::string_view name, const WordVectorTable& table);

struct NameEmbeddingMatrix {
  EmbeddingMatrix rows;
  std::vector<bool> oov_mask;
};

NameEmbeddingMatrix name_embeddings(const std::vector<std::string>& names,
                                    const WordVectorTable& table);

/// Edit distance over any random-access sequence, two-row DP.
template <typename Sequence>
std::size_t edit_distance(const Sequence& a, const Sequence& b) {
  const Sequence& longer = a.size() >= b.size() ? a : b;
  const Sequence& shorter = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  for (std::size_t j = 0; j <= shorter.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (longer[i - 1] == shorter[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[shorter.size()];
}

/// Edit distance between UTF-8 strings, counted in Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein / max(|a|, |b|); two empty strings give 1.
double lev_ratio(std::string_view a, std::string_view b);

SimilarityMatrix string_sim_matrix(const std::vector<std::string>& src_names,
                                   const std::vector<std::string>& tgt_names);

}  // namespace kgalign

#endif  // KGALIGN_NAME_FEATURES_HPP_
