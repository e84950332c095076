#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osnlab/crawl.hpp"
#include "osnlab/metrics.hpp"
#include "osnlab/synth_world.hpp"

namespace osnlab {

struct UniParams {
  unsigned queues = 8;
  std::size_t queue_len = 4096;
  std::uint64_t seed = 42;
};

/// One end-to-end run: world -> service -> BFS + UNI crawls -> clean ->
/// analyze -> compare.
struct ExperimentConfig {
  WorldConfig world;
  std::uint64_t friend_cap = 40;
  double rate_limit = 0.0;
  CrawlLimits bfs;
  UniParams uni;
  double q = 0.9;
  int spectral_k = 20;
  std::filesystem::path out_dir;
  std::string username = "agent";
  std::string password = "secret";
  std::string listen_host = "127.0.0.1";
  int listen_port = 0;  // 0 picks a free port

  /// Desk-scale defaults: 10^5 users, cap 40, 8 uniform queues of 4096.
  static ExperimentConfig desk_default();
  void validate() const;
};

/// Crawl-side degree statistics over visited profiles. The graph-side and
/// visited-side averages answer different questions (the whole sample
/// graph includes barely-observed frontier nodes), so both are reported.
struct SampleStats {
  std::uint64_t attempts = 0;
  std::uint64_t visited = 0;
  std::uint64_t private_profiles = 0;
  std::uint64_t not_found = 0;
  std::uint64_t errors = 0;
  std::uint64_t observations = 0;
  std::uint64_t throttled_429 = 0;
  double visited_mean_degree = 0;
  double visited_degree_stddev = 0;  // sample stddev
  std::uint64_t visited_median_degree = 0;
};

SampleStats sample_stats(const RawCrawl& crawl);

/// One named bias check with its statistic and threshold.
struct Verdict {
  std::string name;
  bool pass = false;
  double statistic = 0;
  double threshold = 0;
  std::string detail;
  std::vector<std::pair<std::string, double>> stats;
};

struct ComparisonSummary {
  MetricsReport bfs_report, uni_report, truth_report;
  SampleStats bfs_stats, uni_stats;
  std::vector<Verdict> verdicts;

  const Verdict& find(const std::string& name) const;
};

/// The five verdicts: degree-bias (BFS above truth, UNI within 3 standard
/// errors), median-pinning at the friend cap, component fragmentation,
/// privacy discrepancy and rejection hit rate. Reports must share q and
/// spectral depth.
ComparisonSummary compare_reports(const MetricsReport& bfs_report,
                                  const MetricsReport& uni_report,
                                  const MetricsReport& truth_report,
                                  const SampleStats& bfs_stats,
                                  const SampleStats& uni_stats,
                                  const ExperimentConfig& cfg);

ComparisonSummary run_experiment(const ExperimentConfig& cfg);

void save_summary(const ComparisonSummary& summary,
                  const std::filesystem::path& file);

/// Digest of every file under dir (FNV-1a 64), one line per file.
void write_manifest(const std::filesystem::path& dir);

/// Paths whose current digest differs from the manifest entry.
std::vector<std::string> manifest_drift(const std::filesystem::path& dir);

}  // namespace osnlab
