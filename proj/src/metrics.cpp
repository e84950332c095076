#include "osnlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "osnlab/error.hpp"
#include "osnlab/kv_file.hpp"
#include "osnlab/rng.hpp"

namespace osnlab {

namespace {

/// Index-space CSR view of a graph; all metric kernels run on this.
struct CompactAdjacency {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> neighbors;  // sorted per node (id order == index order)

  explicit CompactAdjacency(const SocialGraph& g) : n(g.node_count()) {
    offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
      offsets[i + 1] = offsets[i] + g.degree_at(i);
    neighbors.resize(offsets.back());
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (NodeId v : g.neighbors_at(i))
        neighbors[cursor++] = static_cast<std::uint32_t>(g.index_of(v));
  }

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {neighbors.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::size_t degree(std::size_t i) const {
    return offsets[i + 1] - offsets[i];
  }
};

std::size_t intersection_size(std::span<const std::uint32_t> a,
                              std::span<const std::uint32_t> b) {
  std::size_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (a[i] > b[j]) ++j;
    else { ++count; ++i; ++j; }
  }
  return count;
}

double node_clustering(const CompactAdjacency& adj, std::size_t i) {
  const auto nbrs = adj.row(i);
  const std::size_t k = nbrs.size();
  if (k < 2) return 0.0;
  std::size_t closed = 0;  // ordered neighbor pairs that are adjacent
  for (std::uint32_t u : nbrs) closed += intersection_size(nbrs, adj.row(u));
  return static_cast<double>(closed) /
         (static_cast<double>(k) * static_cast<double>(k - 1));
}

/// BFS distance counts from one source, appended into hist[distance].
void bfs_distance_counts(const CompactAdjacency& adj, std::uint32_t source,
                         std::vector<std::uint32_t>& dist,
                         std::vector<std::uint32_t>& queue,
                         std::vector<std::uint64_t>& hist) {
  constexpr std::uint32_t kUnreached = 0xFFFFFFFFu;
  dist.assign(adj.n, kUnreached);
  queue.clear();
  dist[source] = 0;
  queue.push_back(source);
  std::size_t head = 0;
  while (head < queue.size()) {
    std::uint32_t v = queue[head++];
    std::uint32_t d = dist[v] + 1;
    for (std::uint32_t w : adj.row(v)) {
      if (dist[w] != kUnreached) continue;
      dist[w] = d;
      if (hist.size() <= d) hist.resize(d + 1, 0);
      ++hist[d];
      queue.push_back(w);
    }
  }
}

}  // namespace

DegreeHistogram degree_distribution(const SocialGraph& g) {
  if (g.node_count() == 0) throw Error("degree distribution of empty graph");
  DegreeHistogram hist;
  hist.n = g.node_count();
  for (std::size_t i = 0; i < g.node_count(); ++i)
    ++hist.entries[g.degree_at(i)];
  return hist;
}

std::vector<CcdfPoint> ccdf(const DegreeHistogram& hist) {
  std::vector<CcdfPoint> points;
  points.reserve(hist.entries.size());
  // Suffix sums over ascending degrees: p(k) = |{v : deg(v) >= k}| / n.
  std::size_t at_least = hist.n;
  for (const auto& [k, count] : hist.entries) {
    points.push_back(
        {k, static_cast<double>(at_least) / static_cast<double>(hist.n)});
    at_least -= count;
  }
  return points;
}

double avg_degree(const SocialGraph& g) {
  if (g.node_count() == 0) throw Error("avg degree of empty graph");
  return 2.0 * static_cast<double>(g.edge_count()) /
         static_cast<double>(g.node_count());
}

std::uint64_t median_degree(const SocialGraph& g) {
  if (g.node_count() == 0) throw Error("median degree of empty graph");
  std::vector<std::uint64_t> degrees(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) degrees[i] = g.degree_at(i);
  const std::size_t mid = (degrees.size() - 1) / 2;  // lower median
  std::nth_element(degrees.begin(), degrees.begin() + mid, degrees.end());
  return degrees[mid];
}

HopPlot hop_plot(const SocialGraph& g, bool exact, std::size_t sample_sources,
                 std::uint64_t rng_seed) {
  if (g.node_count() == 0) throw Error("hop plot of empty graph");
  const CompactAdjacency adj(g);
  const std::size_t n = adj.n;

  std::vector<std::uint32_t> sources;
  if (exact || sample_sources >= n) {
    if (!exact && sample_sources > n)
      std::cerr << "[osnlab] warning: hop-plot sources clamped to n=" << n
                << "\n";
    exact = exact || sample_sources >= n;
    sources.resize(n);
    std::iota(sources.begin(), sources.end(), 0);
  } else {
    // Uniform sample without replacement: partial Fisher-Yates.
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(rng_seed);
    for (std::size_t i = 0; i < sample_sources; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      sources.push_back(pool[i]);
    }
  }

  // Integer counts per distance, summed across workers; the sum is
  // independent of the thread partition, so results do not depend on
  // worker count.
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                            std::max<std::size_t>(1, sources.size()));
  std::vector<std::vector<std::uint64_t>> hists(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      std::vector<std::uint32_t> dist, queue;
      for (std::size_t s = w; s < sources.size(); s += workers)
        bfs_distance_counts(adj, sources[s], dist, queue, hists[w]);
    });
  }
  for (auto& t : threads) t.join();

  std::size_t max_h = 0;
  for (const auto& h : hists) max_h = std::max(max_h, h.size());
  std::vector<std::uint64_t> counts(max_h, 0);
  for (const auto& h : hists)
    for (std::size_t d = 0; d < h.size(); ++d) counts[d] += h[d];

  HopPlot hp;
  hp.sampled = !exact;
  hp.sources = sources.size();
  // Each unordered pair is seen once per sampled endpoint: twice in exact
  // mode, on average 2*sources/n times otherwise.
  const double scale = static_cast<double>(n) /
                       (2.0 * static_cast<double>(sources.size()));
  double cumulative = 0;
  for (std::size_t d = 1; d < counts.size(); ++d) {
    cumulative += static_cast<double>(counts[d]) * scale;
    hp.g.push_back(cumulative);
  }
  hp.total_pairs = cumulative;
  return hp;
}

double effective_diameter(const HopPlot& hp, double q) {
  if (q <= 0 || q > 1) throw ConfigError("quantile q must be in (0, 1]");
  if (hp.total_pairs <= 0)
    throw Error("effective diameter undefined: no connected pairs");
  double f_prev = 0;  // f(0) = 0
  for (std::size_t h = 1; h <= hp.g.size(); ++h) {
    const double f = hp.g[h - 1] / hp.total_pairs;
    if (f >= q)
      return (static_cast<double>(h) - 1.0) + (q - f_prev) / (f - f_prev);
    f_prev = f;
  }
  // q <= 1 and f(max h) = 1, so the loop always returns; guard anyway.
  return static_cast<double>(hp.g.size());
}

double clustering_coefficient(const SocialGraph& g, NodeId v) {
  const CompactAdjacency adj(g);
  return node_clustering(adj, g.index_of(v));
}

namespace {

/// Per-node coefficients, computed in parallel into fixed slots so the
/// result is independent of worker count.
std::vector<double> all_clusterings(const CompactAdjacency& adj) {
  std::vector<double> c(adj.n, 0.0);
  const std::size_t workers = std::min<std::size_t>(
      std::max(1u, std::thread::hardware_concurrency()),
      std::max<std::size_t>(1, adj.n));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < adj.n; i += workers)
        c[i] = node_clustering(adj, i);
    });
  }
  for (auto& t : threads) t.join();
  return c;
}

}  // namespace

double avg_clustering(const SocialGraph& g) {
  if (g.node_count() == 0) throw Error("clustering of empty graph");
  const CompactAdjacency adj(g);
  const std::vector<double> c = all_clusterings(adj);
  double sum = 0;
  for (double v : c) sum += v;  // sequential reduction: deterministic
  return sum / static_cast<double>(c.size());
}

std::map<std::uint64_t, double> clustering_by_degree(const SocialGraph& g) {
  const CompactAdjacency adj(g);
  const std::vector<double> c = all_clusterings(adj);
  std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < adj.n; ++i) {
    auto& [sum, count] = acc[adj.degree(i)];
    sum += c[i];
    ++count;
  }
  std::map<std::uint64_t, double> out;
  for (const auto& [k, sc] : acc) out[k] = sc.first / double(sc.second);
  return out;
}

std::vector<std::size_t> connected_components(const SocialGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::uint32_t> size(n, 1);

  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];  // path halving
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId v : g.neighbors_at(i)) {
      std::uint32_t a = find(static_cast<std::uint32_t>(i));
      std::uint32_t b = find(static_cast<std::uint32_t>(g.index_of(v)));
      if (a == b) continue;
      if (size[a] < size[b]) std::swap(a, b);
      parent[b] = a;
      size[a] += size[b];
    }
  }
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < n; ++i)
    if (find(static_cast<std::uint32_t>(i)) == i) sizes.push_back(size[i]);
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

// ---------------------------------------------------------------------------
// Spectrum by power iteration on A^2 with explicit deflation.

namespace {

void apply_adjacency(const CompactAdjacency& adj,
                     const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < adj.n; ++i) {
    double sum = 0;
    for (std::uint32_t j : adj.row(i)) sum += x[j];
    y[i] = sum;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void orthogonalize(std::vector<double>& x,
                   const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double coeff = dot(b, x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= coeff * b[i];
  }
}

bool random_unit_start(std::vector<double>& x, std::uint64_t seed,
                       const std::vector<std::vector<double>>& basis) {
  for (std::uint64_t attempt = 0; attempt < 20; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    for (double& e : x) e = rng.unit() - 0.5;
    orthogonalize(x, basis);
    const double nx = norm(x);
    if (nx > 1e-9) {
      for (double& e : x) e /= nx;
      return true;
    }
  }
  return false;  // deflated space exhausted (k > rank)
}

void fix_sign(std::vector<double>& v) {
  for (double e : v) {
    if (std::abs(e) > 1e-12) {
      if (e < 0)
        for (double& x : v) x = -x;
      return;
    }
  }
}

}  // namespace

SpectralResult top_singular_values(const SocialGraph& g,
                                   const SpectralOptions& options) {
  if (g.node_count() == 0) throw Error("spectrum of empty graph");
  if (options.k < 1) throw ConfigError("spectral k must be >= 1");
  const CompactAdjacency adj(g);
  const std::size_t n = adj.n;
  const std::size_t k = std::min<std::size_t>(options.k, n);

  SpectralResult result;
  std::vector<std::vector<double>> basis;
  std::vector<double> sigmas;
  std::vector<double> x(n), ax(n), y(n);
  int total_iterations = 0;

  for (std::size_t j = 0; j < k; ++j) {
    if (!random_unit_start(x, derive_seed(options.seed, j * 1000003), basis)) {
      sigmas.push_back(0.0);
      basis.emplace_back(n, 0.0);
      continue;
    }
    double rho = 0;
    bool converged = false;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
      ++total_iterations;
      apply_adjacency(adj, x, ax);
      apply_adjacency(adj, ax, y);
      orthogonalize(y, basis);  // deflated operator: P A^2 P
      const double rho_new = dot(x, y);
      const double ny = norm(y);
      if (ny < 1e-14) {  // remaining space is in the kernel
        rho = std::max(0.0, rho_new);
        converged = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
      if (iter >= options.min_iter &&
          std::abs(rho_new - rho) <= options.tol * std::max(1.0, rho_new)) {
        rho = rho_new;
        converged = true;
        break;
      }
      rho = rho_new;
    }
    if (!converged) result.converged = false;
    sigmas.push_back(std::sqrt(std::max(0.0, rho)));
    basis.push_back(x);
  }

  // Defensive ordering: a plateau near a close pair can deliver values out
  // of order; all are genuine singular values, so sort with their vectors.
  std::vector<std::size_t> order(sigmas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sigmas[a] > sigmas[b];
  });
  for (std::size_t idx : order) result.values.push_back(sigmas[idx]);
  result.iterations = total_iterations;

  // Principal right singular vector. The converged vector spans the top
  // eigenspace of A^2; A v + sigma v projects onto the +sigma eigenvector
  // when both signs are present (e.g. stars), and is a no-op otherwise.
  const std::vector<double>& top = basis[order.front()];
  const double sigma1 = result.values.front();
  apply_adjacency(adj, top, ax);
  std::vector<double> principal(n);
  for (std::size_t i = 0; i < n; ++i) principal[i] = ax[i] + sigma1 * top[i];
  const double np = norm(principal);
  if (np > 1e-9 * std::max(1.0, sigma1)) {
    for (double& e : principal) e /= np;
  } else {
    principal = top;
  }
  fix_sign(principal);
  result.principal_vector = std::move(principal);
  return result;
}

MetricsReport full_report(const SocialGraph& g, const MetricsParams& params) {
  if (g.node_count() == 0) throw Error("cannot analyze an empty graph");

  MetricsReport report;
  report.n_nodes = g.node_count();
  report.n_edges = g.edge_count();
  report.avg_degree = avg_degree(g);
  report.median_degree = median_degree(g);
  report.degrees = degree_distribution(g);
  report.max_degree = report.degrees.entries.rbegin()->first;
  report.ccdf_points = ccdf(report.degrees);

  report.component_sizes = connected_components(g);
  report.component_count = report.component_sizes.size();
  report.largest_component_fraction =
      report.component_sizes.empty()
          ? 0.0
          : static_cast<double>(report.component_sizes.front()) /
                static_cast<double>(g.node_count());
  for (std::size_t s : report.component_sizes)
    if (s == 1) ++report.isolated_nodes;

  const bool exact = g.node_count() <= params.hop_exact_threshold;
  report.hops = hop_plot(g, exact, params.hop_sample_sources, params.hop_seed);
  report.q = params.q;
  if (report.hops.total_pairs > 0)
    report.effective_diameter = effective_diameter(report.hops, params.q);

  report.avg_clustering = avg_clustering(g);
  report.clustering_by_degree = clustering_by_degree(g);

  SpectralOptions spectral = params.spectral;
  spectral.k = params.spectral_k;
  SpectralResult spec = top_singular_values(g, spectral);
  report.top_singular_values = spec.values;
  report.principal_vector = spec.principal_vector;
  report.spectral_converged = spec.converged;

  // Adjacency spectral bounds, checked on every run.
  if (spec.converged && !spec.values.empty()) {
    const double sigma1 = spec.values.front();
    const double slack = 1e-6 * std::max(1.0, sigma1);
    if (sigma1 + slack < report.avg_degree ||
        sigma1 - slack > static_cast<double>(report.max_degree))
      throw IntegrityError(
          "top singular value " + format_double(sigma1) +
          " violates adjacency bounds [avg_degree, max_degree] = [" +
          format_double(report.avg_degree) + ", " +
          std::to_string(report.max_degree) + "]");
  }
  return report;
}

void save_report(const MetricsReport& report,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  KvFile kv;
  kv.set_u64("n_nodes", report.n_nodes);
  kv.set_u64("n_edges", report.n_edges);
  kv.set_double("avg_degree", report.avg_degree);
  kv.set_u64("median_degree", report.median_degree);
  kv.set_u64("max_degree", report.max_degree);
  kv.set("effective_diameter", report.effective_diameter
                                   ? format_double(*report.effective_diameter)
                                   : "undefined");
  kv.set_double("q", report.q);
  kv.set("hop_mode", report.hops.sampled ? "sampled" : "exact");
  kv.set_u64("hop_sources", report.hops.sources);
  kv.set_double("connected_pairs", report.hops.total_pairs);
  kv.set_double("largest_component_fraction",
                report.largest_component_fraction);
  kv.set_u64("component_count", report.component_count);
  kv.set_u64("isolated_nodes", report.isolated_nodes);
  kv.set_double("avg_clustering", report.avg_clustering);
  kv.set_double("top_singular_value", report.top_singular_values.empty()
                                          ? 0.0
                                          : report.top_singular_values.front());
  kv.set_u64("spectral_k", report.top_singular_values.size());
  kv.set_u64("spectral_converged", report.spectral_converged ? 1 : 0);
  kv.save(dir / "report");

  {
    std::ofstream out(dir / "degree.csv");
    out << "k,count\n";
    for (const auto& [k, count] : report.degrees.entries)
      out << k << ',' << count << '\n';
  }
  {
    std::ofstream out(dir / "ccdf.csv");
    out << "k,ccdf\n";
    for (const CcdfPoint& p : report.ccdf_points)
      out << p.k << ',' << format_double(p.p) << '\n';
  }
  {
    std::ofstream out(dir / "hops.csv");
    out << "h,g\n";
    for (std::size_t h = 1; h <= report.hops.g.size(); ++h)
      out << h << ',' << format_double(report.hops.g[h - 1]) << '\n';
  }
  {
    std::ofstream out(dir / "cc_by_degree.csv");
    out << "k,mean_cc\n";
    for (const auto& [k, c] : report.clustering_by_degree)
      out << k << ',' << format_double(c) << '\n';
  }
  {
    std::ofstream out(dir / "spectrum.csv");
    out << "rank,value\n";
    for (std::size_t r = 0; r < report.top_singular_values.size(); ++r)
      out << (r + 1) << ',' << format_double(report.top_singular_values[r])
          << '\n';
  }
  {
    std::ofstream out(dir / "principal_vector.csv");
    out << "rank,magnitude\n";
    std::vector<double> magnitudes;
    magnitudes.reserve(report.principal_vector.size());
    for (double e : report.principal_vector)
      magnitudes.push_back(std::abs(e));
    std::sort(magnitudes.rbegin(), magnitudes.rend());
    for (std::size_t r = 0; r < magnitudes.size(); ++r)
      out << (r + 1) << ',' << format_double(magnitudes[r]) << '\n';
  }
}

}  // namespace osnlab
