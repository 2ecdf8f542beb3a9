#pragma once

// Exhaustive transport-polytope oracle for small instances. Every vertex of
// the polytope is the basic solution of some spanning tree of the bipartite
// supply/demand graph, so enumerating all spanning-tree supports, solving
// each tree's flows by leaf elimination and keeping the nonnegative ones
// visits every vertex. Independent of the production simplex path.

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "semeq/types.hpp"

namespace ot_oracle {

inline double brute_force_ot_cost(const semeq::RMat& D, const semeq::RVec& mu,
                                  const semeq::RVec& nu) {
  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(nu.size());
  const int cells = m * n;
  const int basis_size = m + n - 1;

  double best = std::numeric_limits<double>::infinity();
  for (uint32_t mask = 0; mask < (1u << cells); ++mask) {
    if (__builtin_popcount(mask) != basis_size) continue;

    std::vector<std::pair<int, int>> edges;
    for (int cell = 0; cell < cells; ++cell)
      if (mask & (1u << cell)) edges.push_back({cell / n, cell % n});

    // spanning tree check via union-find
    std::vector<int> uf(static_cast<size_t>(m + n));
    for (int i = 0; i < m + n; ++i) uf[static_cast<size_t>(i)] = i;
    auto find = [&](int x) {
      while (uf[static_cast<size_t>(x)] != x) {
        uf[static_cast<size_t>(x)] = uf[static_cast<size_t>(uf[static_cast<size_t>(x)])];
        x = uf[static_cast<size_t>(x)];
      }
      return x;
    };
    bool acyclic = true;
    for (const auto& [r, c] : edges) {
      const int a = find(r), b = find(m + c);
      if (a == b) {
        acyclic = false;
        break;
      }
      uf[static_cast<size_t>(a)] = b;
    }
    if (!acyclic) continue;

    // leaf elimination determines the tree flows uniquely
    std::vector<double> supply(static_cast<size_t>(m + n));
    for (int i = 0; i < m; ++i) supply[static_cast<size_t>(i)] = mu[i];
    for (int j = 0; j < n; ++j) supply[static_cast<size_t>(m + j)] = nu[j];
    std::vector<int> degree(static_cast<size_t>(m + n), 0);
    std::vector<bool> alive(edges.size(), true);
    for (const auto& [r, c] : edges) {
      ++degree[static_cast<size_t>(r)];
      ++degree[static_cast<size_t>(m + c)];
    }
    std::vector<double> flows(edges.size(), 0.0);
    for (int round = 0; round < basis_size; ++round) {
      int leaf = -1;
      for (int node = 0; node < m + n; ++node)
        if (degree[static_cast<size_t>(node)] == 1) {
          leaf = node;
          break;
        }
      if (leaf < 0) break;
      for (size_t e = 0; e < edges.size(); ++e) {
        if (!alive[e]) continue;
        const int r = edges[e].first, cn = m + edges[e].second;
        if (r != leaf && cn != leaf) continue;
        const double f = supply[static_cast<size_t>(leaf)];
        flows[e] = f;
        const int other = (r == leaf) ? cn : r;
        supply[static_cast<size_t>(other)] -= f;
        supply[static_cast<size_t>(leaf)] = 0;
        alive[e] = false;
        --degree[static_cast<size_t>(leaf)];
        --degree[static_cast<size_t>(other)];
        break;
      }
    }

    bool feasible = true;
    double cost = 0.0;
    for (size_t e = 0; e < edges.size(); ++e) {
      if (flows[e] < -1e-12) {
        feasible = false;
        break;
      }
      cost += flows[e] * D(edges[e].first, edges[e].second);
    }
    if (feasible) best = std::min(best, cost);
  }
  return best;
}

}  // namespace ot_oracle
