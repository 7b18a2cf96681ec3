#include <algorithm>
#include <numeric>

#include "kgalign/collective.hpp"

namespace kgalign {

PreliminaryResult preliminary_filter(const SimilarityMatrix& m, int rounds) {
  if (rounds < 0) throw ArgumentError("preliminary rounds must be >= 0");
  PreliminaryResult out;
  out.residual_sources.resize(static_cast<std::size_t>(m.rows()));
  out.residual_targets.resize(static_cast<std::size_t>(m.cols()));
  std::iota(out.residual_sources.begin(), out.residual_sources.end(), Index{0});
  std::iota(out.residual_targets.begin(), out.residual_targets.end(), Index{0});

  for (int round = 1; round <= rounds; ++round) {
    auto& rows = out.residual_sources;
    auto& cols = out.residual_targets;
    if (rows.empty() || cols.empty()) break;

    std::vector<Index> col_top(static_cast<std::size_t>(m.cols()), kNoIndex);
    for (Index j : cols) {
      Index best = rows.front();
      for (Index i : rows)
        if (m.scores(i, j) > m.scores(best, j)) best = i;
      col_top[static_cast<std::size_t>(j)] = best;
    }
    std::vector<char> row_done(static_cast<std::size_t>(m.rows()), 0);
    std::vector<char> col_done(static_cast<std::size_t>(m.cols()), 0);
    bool any = false;
    for (Index i : rows) {
      Index best = cols.front();
      for (Index j : cols)
        if (m.scores(i, j) > m.scores(i, best)) best = j;
      if (col_top[static_cast<std::size_t>(best)] == i) {
        out.confirmed.push_back({i, best});
        out.confirmed_round.push_back(round);
        row_done[static_cast<std::size_t>(i)] = 1;
        col_done[static_cast<std::size_t>(best)] = 1;
        any = true;
      }
    }
    if (!any) break;
    std::erase_if(rows, [&](Index i) { return row_done[static_cast<std::size_t>(i)] != 0; });
    std::erase_if(cols, [&](Index j) { return col_done[static_cast<std::size_t>(j)] != 0; });
  }
  return out;
}

}  // namespace kgalign
