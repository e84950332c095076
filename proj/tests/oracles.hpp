#pragma once

// Brute-force reference implementations used only by tests. Everything here
// is written against the dense adjacency matrix so it shares no code path
// with the library's CSR kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "osnlab/graph.hpp"

namespace osnlab::oracle {

struct DenseGraph {
  std::size_t n = 0;
  std::vector<std::vector<char>> adj;

  explicit DenseGraph(const SocialGraph& g) : n(g.node_count()) {
    adj.assign(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (NodeId v : g.neighbors_at(i)) adj[i][g.index_of(v)] = 1;
  }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n; ++j) d += adj[i][j];
    return d;
  }
};

constexpr int kInf = 1 << 29;

/// All-pairs shortest paths by Floyd-Warshall.
inline std::vector<std::vector<int>> all_pairs_distances(const DenseGraph& g) {
  std::vector<std::vector<int>> dist(g.n, std::vector<int>(g.n, kInf));
  for (std::size_t i = 0; i < g.n; ++i) dist[i][i] = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (g.adj[i][j]) dist[i][j] = 1;
  for (std::size_t k = 0; k < g.n; ++k)
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j)
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
  return dist;
}

/// Cumulative connected unordered pairs by distance; index h-1 holds g(h).
inline std::vector<double> hop_counts(const std::vector<std::vector<int>>& dist) {
  int max_d = 0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    for (std::size_t j = i + 1; j < dist.size(); ++j)
      if (dist[i][j] < kInf) max_d = std::max(max_d, dist[i][j]);
  std::vector<double> cumulative(max_d, 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i)
    for (std::size_t j = i + 1; j < dist.size(); ++j)
      if (dist[i][j] < kInf && dist[i][j] >= 1)
        for (int h = dist[i][j]; h <= max_d; ++h) cumulative[h - 1] += 1.0;
  return cumulative;
}

inline double effective_diameter(const std::vector<std::vector<int>>& dist,
                                 double q) {
  const std::vector<double> g = hop_counts(dist);
  const double total = g.empty() ? 0.0 : g.back();
  double f_prev = 0.0;
  for (std::size_t h = 1; h <= g.size(); ++h) {
    const double f = g[h - 1] / total;
    if (f >= q) return (double(h) - 1.0) + (q - f_prev) / (f - f_prev);
    f_prev = f;
  }
  return double(g.size());
}

inline double clustering(const DenseGraph& g, std::size_t i) {
  std::vector<std::size_t> nbrs;
  for (std::size_t j = 0; j < g.n; ++j)
    if (g.adj[i][j]) nbrs.push_back(j);
  if (nbrs.size() < 2) return 0.0;
  std::size_t links = 0;
  for (std::size_t a = 0; a < nbrs.size(); ++a)
    for (std::size_t b = a + 1; b < nbrs.size(); ++b)
      links += g.adj[nbrs[a]][nbrs[b]];
  return 2.0 * double(links) / (double(nbrs.size()) * double(nbrs.size() - 1));
}

inline double avg_clustering(const DenseGraph& g) {
  double sum = 0;
  for (std::size_t i = 0; i < g.n; ++i) sum += clustering(g, i);
  return sum / double(g.n);
}

/// Component sizes, descending, by repeated DFS over the matrix.
inline std::vector<std::size_t> components(const DenseGraph& g) {
  std::vector<char> seen(g.n, 0);
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    std::size_t size = 0;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      ++size;
      for (std::size_t w = 0; w < g.n; ++w)
        if (g.adj[v][w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    sizes.push_back(size);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

/// (degree, ccdf) pairs at each realized degree, ascending by degree.
inline std::vector<std::pair<std::uint64_t, double>> ccdf(const DenseGraph& g) {
  std::vector<std::size_t> degrees;
  for (std::size_t i = 0; i < g.n; ++i) degrees.push_back(g.degree(i));
  std::sort(degrees.begin(), degrees.end());
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (i > 0 && degrees[i] == degrees[i - 1]) continue;
    std::size_t at_least = degrees.size() - i;
    out.emplace_back(degrees[i], double(at_least) / double(g.n));
  }
  return out;
}

}  // namespace osnlab::oracle
