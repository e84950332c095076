#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osnlab/graph.hpp"

namespace osnlab {

struct DegreeHistogram {
  std::map<std::uint64_t, std::size_t> entries;  // degree -> node count
  std::size_t n = 0;
};

struct CcdfPoint {
  std::uint64_t k = 0;
  double p = 0;  // fraction of nodes with degree >= k
};

/// Cumulative count g(h) of unordered connected node pairs at distance
/// <= h, for h = 1..points.size(). Counts are scaled estimates in sampled
/// mode and exact otherwise.
struct HopPlot {
  std::vector<double> g;
  double total_pairs = 0;
  bool sampled = false;
  std::size_t sources = 0;
};

struct SpectralOptions {
  int k = 20;
  double tol = 1e-10;       // relative stall threshold on the Rayleigh value
  int max_iter = 20000;
  int min_iter = 30;
  std::uint64_t seed = 0x05EEDC0FFEEULL;  // start-vector stream
};

struct SpectralResult {
  std::vector<double> values;            // descending singular values
  std::vector<double> principal_vector;  // unit, first nonzero entry positive
  bool converged = true;
  int iterations = 0;
};

struct MetricsParams {
  double q = 0.9;
  int spectral_k = 20;
  SpectralOptions spectral;
  std::size_t hop_exact_threshold = 5000;
  std::size_t hop_sample_sources = 500;
  std::uint64_t hop_seed = 7;
};

/// Everything the analysis stage reports for one graph.
struct MetricsReport {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double avg_degree = 0;
  std::uint64_t median_degree = 0;
  std::uint64_t max_degree = 0;

  std::optional<double> effective_diameter;  // empty when no connected pairs
  double q = 0.9;
  HopPlot hops;

  std::vector<std::size_t> component_sizes;  // descending
  double largest_component_fraction = 0;
  std::size_t component_count = 0;
  std::size_t isolated_nodes = 0;

  double avg_clustering = 0;
  std::map<std::uint64_t, double> clustering_by_degree;

  std::vector<double> top_singular_values;
  std::vector<double> principal_vector;
  bool spectral_converged = true;

  DegreeHistogram degrees;
  std::vector<CcdfPoint> ccdf_points;
};

DegreeHistogram degree_distribution(const SocialGraph& g);

/// Empirical CCDF at every realized degree, non-increasing, p(k_min) = 1.
std::vector<CcdfPoint> ccdf(const DegreeHistogram& hist);

double avg_degree(const SocialGraph& g);

/// Lower median: element floor((n-1)/2) of the ascending degree multiset.
std::uint64_t median_degree(const SocialGraph& g);

/// exact: BFS from every node. sampled: BFS from sample_sources uniform
/// nodes, counts scaled by n/sources (clamped to n with a warning).
HopPlot hop_plot(const SocialGraph& g, bool exact, std::size_t sample_sources,
                 std::uint64_t rng_seed);

/// Interpolated hop count at which fraction q of connected pairs is
/// reachable, with f(0) = 0. Throws when the plot has no pairs.
double effective_diameter(const HopPlot& hp, double q = 0.9);

double clustering_coefficient(const SocialGraph& g, NodeId v);
double avg_clustering(const SocialGraph& g);
std::map<std::uint64_t, double> clustering_by_degree(const SocialGraph& g);

/// Component sizes in descending order (isolated nodes are size-1).
std::vector<std::size_t> connected_components(const SocialGraph& g);

/// Largest-magnitude spectrum of the adjacency operator by power iteration
/// on A^2 (applied through adjacency lists) with deflation against the
/// vectors already found. For the symmetric 0/1 adjacency these are the
/// singular values; the principal vector is the top right singular vector.
SpectralResult top_singular_values(const SocialGraph& g,
                                   const SpectralOptions& options);

MetricsReport full_report(const SocialGraph& g, const MetricsParams& params = {});

/// report + plot-ready CSVs (degree, ccdf, hops, cc_by_degree, spectrum,
/// principal_vector) under dir.
void save_report(const MetricsReport& report,
                 const std::filesystem::path& dir);

}  // namespace osnlab
