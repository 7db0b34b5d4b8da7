#pragma once
// Brute-force reference implementations. Deliberately naive; never shared with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cellbench/ontology.hpp"

namespace oracle {

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

/// All-pairs shortest paths over undirected edges.
inline std::vector<std::vector<int>> floyd_warshall(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [a, b] : edges) {
    d[a][b] = std::min(d[a][b], 1);
    d[b][a] = std::min(d[b][a], 1);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

/// Minimum length over every upward path (enumerated by DFS) from `node` to a parentless node.
inline std::optional<int> exhaustive_depth(int node, const std::vector<std::vector<int>>& parents) {
  std::optional<int> best;
  std::function<void(int, int)> walk = [&](int v, int len) {
    if (parents[v].empty()) {
      if (!best || len < *best) best = len;
      return;
    }
    for (int p : parents[v]) walk(p, len + 1);
  };
  walk(node, 0);
  return best;
}

struct RandomDag {
  std::vector<std::string> ids;
  std::vector<std::vector<int>> parents;  // edges point from child to parent (lower index)
  std::vector<std::pair<int, int>> edges;
  std::vector<cellbench::OntologyTerm> terms;
};

/// Nodes 0..n-1; node i may take parents among 0..i-1, so the graph is acyclic. Some nodes
/// stay parentless (extra roots) and may be isolated.
inline RandomDag random_dag(std::mt19937_64& rng, int max_nodes) {
  RandomDag dag;
  const int n = std::uniform_int_distribution<int>(2, max_nodes)(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  dag.parents.resize(n);
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "T:%07d", i);
    dag.ids.emplace_back(buf);
    if (i == 0 || unit(rng) < 0.08) continue;
    const int k = std::uniform_int_distribution<int>(1, std::min(3, i))(rng);
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < k) chosen.insert(std::uniform_int_distribution<int>(0, i - 1)(rng));
    for (int p : chosen) {
      dag.parents[i].push_back(p);
      dag.edges.emplace_back(i, p);
    }
  }
  for (int i = 0; i < n; ++i) {
    cellbench::OntologyTerm t;
    t.id = dag.ids[i];
    t.name = "term " + std::to_string(i);
    for (int p : dag.parents[i]) t.parents.push_back(dag.ids[p]);
    dag.terms.push_back(std::move(t));
  }
  return dag;
}

/// Ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double naive_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return naive_pearson(naive_ranks(x), naive_ranks(y));
}

/// Tau-b from explicit enumeration of all pairs.
inline double naive_kendall(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tx;
      } else if (dy == 0) {
        ++ty;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return (concordant - discordant) / std::sqrt((concordant + discordant + tx) * (concordant + discordant + ty));
}

/// Exact two-sided permutation p-value by enumerating every ordering of y.
inline double exact_spearman_p(const std::vector<double>& x, const std::vector<double>& y) {
  const double observed = std::abs(naive_spearman(x, y));
  std::vector<std::size_t> idx(y.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double extreme = 0, total = 0;
  do {
    std::vector<double> perm;
    for (auto i : idx) perm.push_back(y[i]);
    if (std::abs(naive_spearman(x, perm)) >= observed - 1e-12) ++extreme;
    ++total;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return extreme / total;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

}  // namespace oracle
