#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "kgalign/collective.hpp"

namespace kgalign {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::none:
      return "none";
    case Provenance::preliminary:
      return "preliminary";
    case Provenance::rl:
      return "rl";
    case Provenance::greedy:
      return "greedy";
    case Provenance::stable:
      return "stable";
    case Provenance::hungarian:
      return "hungarian";
  }
  return "none";
}

Provenance parse_provenance(const std::string& name) {
  for (auto p : {Provenance::none, Provenance::preliminary, Provenance::rl, Provenance::greedy,
                 Provenance::stable, Provenance::hungarian})
    if (to_string(p) == name) return p;
  throw ArgumentError("unknown provenance '" + name + "'");
}

AlignmentResult AlignmentResult::unassigned(Index n_sources) {
  return {std::vector<Index>(static_cast<std::size_t>(n_sources), kNoIndex),
          std::vector<Provenance>(static_cast<std::size_t>(n_sources), Provenance::none)};
}

void AlignmentResult::assign(Index source, Index tgt, Provenance p) {
  target.at(static_cast<std::size_t>(source)) = tgt;
  provenance.at(static_cast<std::size_t>(source)) = p;
}

double total_similarity(const AlignmentResult& r, const SimilarityMatrix& m) {
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    if (const Index t = r.target[static_cast<std::size_t>(i)]; t != kNoIndex) total += m.scores(i, t);
  return total;
}

Multiplicities count_multiplicities(const AlignmentResult& r) {
  std::unordered_map<Index, Index> uses;
  for (Index t : r.target)
    if (t != kNoIndex) ++uses[t];
  Multiplicities out;
  for (const auto& [t, n] : uses) {
    if (n > 1) {
      ++out.multe;
      out.mulse += n;
    }
  }
  return out;
}

AlignmentResult greedy_independent(const SimilarityMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw ArgumentError("greedy decoding needs a nonempty matrix");
  auto r = AlignmentResult::unassigned(m.rows());
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < m.cols(); ++j)
      if (m.scores(i, j) > m.scores(i, best)) best = j;
    r.assign(i, best, Provenance::greedy);
  }
  return r;
}

namespace {

/// Indices of row i of m sorted by descending score, lower index on ties.
std::vector<Index> preference_order(const SimilarityMatrix& m, Index i) {
  std::vector<Index> order(static_cast<std::size_t>(m.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return m.scores(i, a) > m.scores(i, b); });
  return order;
}

/// True when target j strictly prefers source a over source b.
bool target_prefers(const SimilarityMatrix& m, Index j, Index a, Index b) {
  const double sa = m.scores(a, j);
  const double sb = m.scores(b, j);
  return sa > sb || (sa == sb && a < b);
}

}  // namespace

AlignmentResult stable_matching(const SimilarityMatrix& m) {
  const Index n_src = m.rows();
  const Index n_tgt = m.cols();
  auto r = AlignmentResult::unassigned(n_src);
  if (n_src == 0 || n_tgt == 0) return r;

  std::vector<std::vector<Index>> prefs(static_cast<std::size_t>(n_src));
  for (Index i = 0; i < n_src; ++i) prefs[static_cast<std::size_t>(i)] = preference_order(m, i);
  std::vector<std::size_t> next_proposal(static_cast<std::size_t>(n_src), 0);
  std::vector<Index> holder(static_cast<std::size_t>(n_tgt), kNoIndex);

  std::vector<Index> free_sources(static_cast<std::size_t>(n_src));
  std::iota(free_sources.rbegin(), free_sources.rend(), Index{0});
  while (!free_sources.empty()) {
    const Index u = free_sources.back();
    auto& next = next_proposal[static_cast<std::size_t>(u)];
    if (next >= prefs[static_cast<std::size_t>(u)].size()) {
      free_sources.pop_back();  // exhausted: stays unassigned
      continue;
    }
    const Index v = prefs[static_cast<std::size_t>(u)][next++];
    Index& current = holder[static_cast<std::size_t>(v)];
    if (current == kNoIndex) {
      current = u;
      free_sources.pop_back();
    } else if (target_prefers(m, v, u, current)) {
      free_sources.back() = current;
      current = u;
    }
  }
  for (Index v = 0; v < n_tgt; ++v)
    if (const Index u = holder[static_cast<std::size_t>(v)]; u != kNoIndex)
      r.assign(u, v, Provenance::stable);
  return r;
}

namespace {

/// Minimum-cost assignment of every row to a distinct column, rows <= cols.
/// Returns the column of each row.
std::vector<Index> min_cost_assignment(const MatrixXd& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials and matching, column 0 is the virtual start.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(m + 1), 0);
  std::vector<Index> way(static_cast<std::size_t>(m + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(p[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(n), kNoIndex);
  for (Index j = 1; j <= m; ++j)
    if (const Index i = p[static_cast<std::size_t>(j)]; i != 0)
      row_to_col[static_cast<std::size_t>(i - 1)] = j - 1;
  return row_to_col;
}

}  // namespace

AlignmentResult hungarian(const SimilarityMatrix& m) {
  auto r = AlignmentResult::unassigned(m.rows());
  if (m.rows() == 0 || m.cols() == 0) return r;
  if (!m.scores.allFinite()) throw ArgumentError("hungarian needs finite scores");
  if (m.rows() <= m.cols()) {
    const MatrixXd cost = -m.scores;
    const auto cols = min_cost_assignment(cost);
    for (Index i = 0; i < m.rows(); ++i)
      r.assign(i, cols[static_cast<std::size_t>(i)], Provenance::hungarian);
  } else {
    const MatrixXd cost = -m.scores.transpose();
    const auto rows = min_cost_assignment(cost);
    for (Index j = 0; j < m.cols(); ++j)
      r.assign(rows[static_cast<std::size_t>(j)], j, Provenance::hungarian);
  }
  return r;
}

}  // namespace kgalign
