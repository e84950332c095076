#include <doctest.h>

#include <fstream>

#include "osnlab/error.hpp"
#include "osnlab/harness.hpp"
#include "osnlab/kv_file.hpp"
#include "test_util.hpp"

using namespace osnlab;
using testutil::TempDir;

namespace {

/// Small but non-trivial experiment that runs in a few seconds: 2048 users
/// on a 14-bit id space (density 1/8), cap 10, two uniform queues.
ExperimentConfig mini_config(const std::filesystem::path& out) {
  ExperimentConfig cfg = ExperimentConfig::desk_default();
  cfg.world.n_users = 1 << 11;
  cfg.world.min_degree = 1;
  cfg.world.max_degree = 40;
  cfg.world.isolated_fraction = 0.02;
  cfg.world.rng_seed = 9;
  cfg.friend_cap = 10;
  cfg.bfs.max_visited = 150;
  cfg.uni.queues = 2;
  cfg.uni.queue_len = 2048;
  cfg.uni.seed = 17;
  cfg.spectral_k = 5;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("sample_stats summarizes a harvest") {
  RawCrawl crawl;
  crawl.visits = {
      {1, VisitOutcome::visited, 4, false, 0},
      {2, VisitOutcome::visited, 10, true, 1},
      {3, VisitOutcome::private_profile, 0, false, 1},
      {4, VisitOutcome::not_found, 0, false, -1},
      {5, VisitOutcome::visited, 7, false, 2},
      {6, VisitOutcome::error, 0, false, 2},
  };
  SampleStats stats = sample_stats(crawl);
  CHECK(stats.attempts == 6);
  CHECK(stats.visited == 3);
  CHECK(stats.private_profiles == 1);
  CHECK(stats.not_found == 1);
  CHECK(stats.errors == 1);
  CHECK(stats.visited_mean_degree == doctest::Approx(7.0));
  CHECK(stats.visited_median_degree == 7);  // sorted [4,7,10], lower median
}

TEST_CASE("self-comparison reports no sampler bias") {
  SocialGraph g = testutil::random_graph(60, 0.1, 3);
  MetricsParams params;
  params.spectral_k = 3;
  MetricsReport report = full_report(g, params);

  SampleStats stats;
  stats.attempts = 100;
  stats.visited = 60;
  stats.visited_mean_degree = report.avg_degree;
  stats.visited_degree_stddev = 1.0;
  stats.visited_median_degree = report.median_degree;

  ExperimentConfig cfg = ExperimentConfig::desk_default();
  cfg.world.n_users = 60;
  cfg.world.max_degree = 30;
  cfg.world.privacy_fraction = 0.0;
  cfg.friend_cap = 1000;  // inactive

  ComparisonSummary summary =
      compare_reports(report, report, report, stats, stats, cfg);
  REQUIRE(summary.verdicts.size() == 5);

  // The degree-bias test must not fire on identical samples.
  const Verdict& bias = summary.find("degree_bias");
  CHECK_FALSE(bias.pass);
  for (const auto& [key, value] : bias.stats)
    if (key == "bfs_biased_high") CHECK(value == 0.0);

  const Verdict& median = summary.find("median_pinning");
  CHECK(median.pass);
  CHECK(median.detail.find("not pinned") != std::string::npos);

  // One connected sample cannot show uni-style fragmentation.
  if (report.largest_component_fraction >= 0.999)
    CHECK_FALSE(summary.find("component_fragmentation").pass);
}

TEST_CASE("compare_reports rejects mismatched parameters") {
  SocialGraph g = testutil::random_graph(30, 0.15, 4);
  MetricsParams p1;
  p1.spectral_k = 3;
  MetricsParams p2 = p1;
  p2.q = 0.8;
  MetricsReport a = full_report(g, p1);
  MetricsReport b = full_report(g, p2);
  SampleStats stats;
  ExperimentConfig cfg = ExperimentConfig::desk_default();
  CHECK_THROWS_AS(compare_reports(a, b, a, stats, stats, cfg), ConfigError);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg = ExperimentConfig::desk_default();
  cfg.uni.queues = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = ExperimentConfig::desk_default();
  cfg.out_dir.clear();
  CHECK_THROWS_AS(run_experiment(cfg), Error);
}

TEST_CASE("mini end-to-end experiment" * doctest::timeout(300)) {
  TempDir dir("experiment");
  ExperimentConfig cfg = mini_config(dir.path() / "run1");
  ComparisonSummary summary = run_experiment(cfg);

  // Every stage left its artifacts.
  for (const char* sub : {"world", "raw_bfs", "raw_uni", "clean_bfs",
                          "clean_uni", "truth", "bfs", "uni"})
    CHECK(std::filesystem::is_directory(cfg.out_dir / sub));
  CHECK(std::filesystem::exists(cfg.out_dir / "summary"));
  CHECK(std::filesystem::exists(cfg.out_dir / "manifest.tsv"));

  // Verdicts populated with statistics and thresholds.
  REQUIRE(summary.verdicts.size() == 5);
  for (const Verdict& v : summary.verdicts) {
    CHECK_FALSE(v.name.empty());
    CHECK_FALSE(v.detail.empty());
    CHECK_FALSE(v.stats.empty());
  }
  // Density 1/8 with 4096 probes: the hit-rate band is tight and solid.
  CHECK(summary.find("hit_rate").pass);
  // 2% isolated users: the uniform sample picks up singletons.
  CHECK(summary.find("component_fragmentation").pass);
  // Privacy ratio lands near the configured fraction (loose sanity here;
  // the tight band needs more hits than this mini run collects).
  CHECK(summary.find("privacy_discrepancy").statistic ==
        doctest::Approx(0.266).epsilon(0.35));

  // Summary file carries both degree conventions, labeled.
  KvFile kv = KvFile::load(cfg.out_dir / "summary");
  CHECK(kv.has("bfs.avg_degree_graph"));
  CHECK(kv.has("bfs.avg_degree_visited"));
  CHECK(kv.has("uni.median_degree_visited"));
  CHECK(kv.has("truth.avg_degree_graph"));
  CHECK(kv.has("verdict.hit_rate.pass"));
  CHECK(kv.require_u64("verdict.median_pinning.pass") == 1);

  // Re-run with the same seeds: identical world and BFS sample.
  ExperimentConfig rerun = mini_config(dir.path() / "run2");
  run_experiment(rerun);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(cfg.out_dir / "clean_bfs" / "edges.tsv") ==
        slurp(rerun.out_dir / "clean_bfs" / "edges.tsv"));
  CHECK(slurp(cfg.out_dir / "world" / "edges.tsv") ==
        slurp(rerun.out_dir / "world" / "edges.tsv"));

  // Manifest matches the tree until a file drifts.
  CHECK(manifest_drift(cfg.out_dir).empty());
  {
    std::ofstream tamper(cfg.out_dir / "summary", std::ios::app);
    tamper << "# drift\n";
  }
  auto drifted = manifest_drift(cfg.out_dir);
  REQUIRE(drifted.size() == 1);
  CHECK(drifted[0] == "summary");
}
