#include "osnlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include "osnlab/error.hpp"
#include "osnlab/kv_file.hpp"
#include "osnlab/pipeline.hpp"
#include "osnlab/service.hpp"

namespace osnlab {

ExperimentConfig ExperimentConfig::desk_default() {
  ExperimentConfig cfg;
  cfg.world.n_users = 100000;
  cfg.world.gamma = 2.5;
  cfg.world.min_degree = 1;
  cfg.world.max_degree = 300;
  cfg.world.privacy_fraction = 0.266;
  cfg.world.isolated_fraction = 0.01;
  cfg.world.rng_seed = 1;
  cfg.friend_cap = 40;
  cfg.bfs.max_depth = 3;
  cfg.bfs.max_visited = 2000;
  cfg.bfs.max_seconds = 600;
  return cfg;
}

void ExperimentConfig::validate() const {
  world.validate();
  bfs.validate();
  if (friend_cap < 1) throw ConfigError("friend_cap must be >= 1");
  if (uni.queues < 1) throw ConfigError("need at least one uniform queue");
  if (uni.queue_len < 1) throw ConfigError("queue_len must be >= 1");
  if (spectral_k < 1) throw ConfigError("spectral_k must be >= 1");
  if (q <= 0 || q > 1) throw ConfigError("q must be in (0, 1]");
}

SampleStats sample_stats(const RawCrawl& crawl) {
  SampleStats stats;
  stats.attempts = crawl.visits.size();
  stats.observations = crawl.observations.size();
  stats.throttled_429 = crawl.throttled_429;

  std::vector<std::uint64_t> degrees;
  for (const VisitRecord& v : crawl.visits) {
    switch (v.outcome) {
      case VisitOutcome::visited:
        ++stats.visited;
        degrees.push_back(v.degree);
        break;
      case VisitOutcome::private_profile: ++stats.private_profiles; break;
      case VisitOutcome::not_found: ++stats.not_found; break;
      case VisitOutcome::error: ++stats.errors; break;
    }
  }
  if (!degrees.empty()) {
    double sum = 0;
    for (auto d : degrees) sum += double(d);
    stats.visited_mean_degree = sum / double(degrees.size());
    if (degrees.size() > 1) {
      double ss = 0;
      for (auto d : degrees) {
        const double delta = double(d) - stats.visited_mean_degree;
        ss += delta * delta;
      }
      stats.visited_degree_stddev = std::sqrt(ss / double(degrees.size() - 1));
    }
    std::sort(degrees.begin(), degrees.end());
    stats.visited_median_degree = degrees[(degrees.size() - 1) / 2];
  }
  return stats;
}

const Verdict& ComparisonSummary::find(const std::string& name) const {
  for (const Verdict& v : verdicts)
    if (v.name == name) return v;
  throw NotFoundError("no verdict named '" + name + "'");
}

namespace {

// z for the central 99.9% of a binomial (normal approximation).
constexpr double kZ999 = 3.2905267314919255;

Verdict degree_bias_verdict(const SampleStats& bfs, const SampleStats& uni,
                            const MetricsReport& truth) {
  Verdict v;
  v.name = "degree_bias";
  const double truth_mean = truth.avg_degree;
  const bool bfs_biased = bfs.visited_mean_degree > truth_mean;
  const double uni_se =
      uni.visited > 1
          ? uni.visited_degree_stddev / std::sqrt(double(uni.visited))
          : 0.0;
  const double uni_offset = std::abs(uni.visited_mean_degree - truth_mean);
  const bool uni_unbiased = uni.visited > 1 && uni_offset <= 3.0 * uni_se;
  v.pass = bfs_biased && uni_unbiased;
  v.statistic = bfs.visited_mean_degree - truth_mean;
  v.threshold = 0.0;
  v.detail = bfs_biased ? "bfs overshoots the true mean degree"
                        : "bfs does not overshoot the true mean degree";
  v.stats = {{"truth_mean_degree", truth_mean},
             {"bfs_visited_mean_degree", bfs.visited_mean_degree},
             {"uni_visited_mean_degree", uni.visited_mean_degree},
             {"uni_standard_error", uni_se},
             {"uni_offset", uni_offset},
             {"bfs_biased_high", bfs_biased ? 1.0 : 0.0},
             {"uni_within_3se", uni_unbiased ? 1.0 : 0.0}};
  return v;
}

Verdict median_pinning_verdict(const SampleStats& bfs, const SampleStats& uni,
                               const MetricsReport& truth,
                               std::uint64_t cap) {
  Verdict v;
  v.name = "median_pinning";
  v.threshold = double(cap);
  v.statistic = double(bfs.visited_median_degree);
  const bool cap_active = truth.median_degree > cap;
  if (!cap_active) {
    v.pass = true;
    v.detail = "not pinned (cap at or above the true median)";
  } else {
    v.pass = bfs.visited_median_degree == cap &&
             uni.visited_median_degree == cap;
    v.detail = v.pass ? "both sample medians pinned at the cap"
                      : "sample median escaped the cap";
  }
  v.stats = {{"cap", double(cap)},
             {"truth_median_degree", double(truth.median_degree)},
             {"bfs_visited_median", double(bfs.visited_median_degree)},
             {"uni_visited_median", double(uni.visited_median_degree)},
             {"cap_active", cap_active ? 1.0 : 0.0}};
  return v;
}

Verdict component_verdict(const MetricsReport& bfs, const MetricsReport& uni) {
  Verdict v;
  v.name = "component_fragmentation";
  const bool bfs_connected = bfs.largest_component_fraction >= 0.999;
  const bool uni_fragmented = uni.largest_component_fraction < 1.0;
  const bool uni_singletons = uni.isolated_nodes >= 1;
  v.pass = bfs_connected && uni_fragmented && uni_singletons;
  v.statistic = uni.largest_component_fraction;
  v.threshold = 1.0;
  v.detail = v.pass ? "bfs near-connected, uni fragmented with singletons"
                    : "component structure did not separate the samplers";
  v.stats = {{"bfs_largest_fraction", bfs.largest_component_fraction},
             {"uni_largest_fraction", uni.largest_component_fraction},
             {"uni_singletons", double(uni.isolated_nodes)},
             {"bfs_connected", bfs_connected ? 1.0 : 0.0}};
  return v;
}

Verdict privacy_verdict(const SampleStats& uni, double expected_fraction) {
  Verdict v;
  v.name = "privacy_discrepancy";
  const std::uint64_t existing = uni.visited + uni.private_profiles;
  const double ratio =
      existing == 0 ? 0.0 : double(uni.private_profiles) / double(existing);
  v.statistic = ratio;
  v.threshold = 0.02;
  v.pass = std::abs(ratio - expected_fraction) <= 0.02;
  v.detail = "private/(private+visited) vs configured fraction";
  v.stats = {{"observed_fraction", ratio},
             {"configured_fraction", expected_fraction},
             {"existing_hits", double(existing)}};
  return v;
}

Verdict hit_rate_verdict(const SampleStats& uni, const WorldConfig& world) {
  Verdict v;
  v.name = "hit_rate";
  const std::uint64_t probes = uni.attempts - uni.errors;
  const std::uint64_t existing = uni.visited + uni.private_profiles;
  const double expected =
      double(world.n_users) / std::pow(2.0, world.effective_id_space_bits());
  const double rate = probes == 0 ? 0.0 : double(existing) / double(probes);
  const double sigma =
      probes == 0 ? 0.0
                  : std::sqrt(expected * (1.0 - expected) / double(probes));
  v.statistic = rate;
  v.threshold = kZ999 * sigma;
  v.pass = probes > 0 && std::abs(rate - expected) <= v.threshold;
  v.detail = "existing hits per probe vs n/2^bits (central 99.9% band)";
  v.stats = {{"observed_rate", rate},
             {"expected_rate", expected},
             {"probes", double(probes)},
             {"existing_hits", double(existing)}};
  return v;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

std::vector<std::filesystem::path> files_under(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.tsv" &&
        entry.path().parent_path() == dir)
      continue;
    files.push_back(std::filesystem::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

ComparisonSummary compare_reports(const MetricsReport& bfs_report,
                                  const MetricsReport& uni_report,
                                  const MetricsReport& truth_report,
                                  const SampleStats& bfs_stats,
                                  const SampleStats& uni_stats,
                                  const ExperimentConfig& cfg) {
  if (bfs_report.q != uni_report.q || bfs_report.q != truth_report.q)
    throw ConfigError("reports were computed with different quantiles");
  if (bfs_report.top_singular_values.size() !=
          uni_report.top_singular_values.size() ||
      bfs_report.top_singular_values.size() !=
          truth_report.top_singular_values.size())
    throw ConfigError("reports were computed with different spectral depths");

  ComparisonSummary summary;
  summary.bfs_report = bfs_report;
  summary.uni_report = uni_report;
  summary.truth_report = truth_report;
  summary.bfs_stats = bfs_stats;
  summary.uni_stats = uni_stats;
  summary.verdicts = {
      degree_bias_verdict(bfs_stats, uni_stats, truth_report),
      median_pinning_verdict(bfs_stats, uni_stats, truth_report,
                             cfg.friend_cap),
      component_verdict(bfs_report, uni_report),
      privacy_verdict(uni_stats, cfg.world.privacy_fraction),
      hit_rate_verdict(uni_stats, cfg.world),
  };
  return summary;
}

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  std::cerr << "[osnlab] stage " << name << "\n";
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error("stage '" + name + "' failed: " + e.what());
  }
}

void write_sample_section(KvFile& kv, const std::string& prefix,
                          const MetricsReport& report,
                          const SampleStats* stats) {
  kv.set_u64(prefix + ".n_nodes", report.n_nodes);
  kv.set_u64(prefix + ".n_edges", report.n_edges);
  kv.set_double(prefix + ".avg_degree_graph", report.avg_degree);
  kv.set_u64(prefix + ".median_degree_graph", report.median_degree);
  kv.set(prefix + ".effective_diameter",
         report.effective_diameter ? format_double(*report.effective_diameter)
                                   : "undefined");
  kv.set_double(prefix + ".largest_component_fraction",
                report.largest_component_fraction);
  kv.set_u64(prefix + ".component_count", report.component_count);
  kv.set_u64(prefix + ".isolated_nodes", report.isolated_nodes);
  kv.set_double(prefix + ".avg_clustering", report.avg_clustering);
  kv.set_double(prefix + ".top_singular_value",
                report.top_singular_values.empty()
                    ? 0.0
                    : report.top_singular_values.front());
  if (stats) {
    kv.set_u64(prefix + ".attempts", stats->attempts);
    kv.set_u64(prefix + ".visited", stats->visited);
    kv.set_u64(prefix + ".private", stats->private_profiles);
    kv.set_u64(prefix + ".not_found", stats->not_found);
    kv.set_u64(prefix + ".errors", stats->errors);
    kv.set_u64(prefix + ".throttled_429", stats->throttled_429);
    kv.set_double(prefix + ".avg_degree_visited", stats->visited_mean_degree);
    kv.set_u64(prefix + ".median_degree_visited",
               stats->visited_median_degree);
  }
}

}  // namespace

void save_summary(const ComparisonSummary& summary,
                  const std::filesystem::path& file) {
  KvFile kv;
  write_sample_section(kv, "truth", summary.truth_report, nullptr);
  write_sample_section(kv, "bfs", summary.bfs_report, &summary.bfs_stats);
  write_sample_section(kv, "uni", summary.uni_report, &summary.uni_stats);
  for (const Verdict& v : summary.verdicts) {
    const std::string prefix = "verdict." + v.name;
    kv.set_u64(prefix + ".pass", v.pass ? 1 : 0);
    kv.set_double(prefix + ".statistic", v.statistic);
    kv.set_double(prefix + ".threshold", v.threshold);
    kv.set(prefix + ".detail", v.detail);
    for (const auto& [key, value] : v.stats)
      kv.set_double(prefix + "." + key, value);
  }
  kv.save(file);
}

void write_manifest(const std::filesystem::path& dir) {
  std::ofstream out(dir / "manifest.tsv", std::ios::trunc);
  if (!out) throw Error("cannot write manifest in " + dir.string());
  for (const auto& rel : files_under(dir)) {
    char digest[17];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(dir / rel)));
    out << rel.generic_string() << '\t'
        << std::filesystem::file_size(dir / rel) << '\t' << digest << '\n';
  }
  if (!out.flush()) throw Error("manifest write failed");
}

std::vector<std::string> manifest_drift(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.tsv");
  if (!in) throw Error("no manifest in " + dir.string());
  std::vector<std::string> drifted;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) continue;
    const std::string rel = line.substr(0, tab1);
    const std::string digest = line.substr(tab2 + 1);
    char current[17] = "";
    if (std::filesystem::exists(dir / rel)) {
      std::snprintf(current, sizeof(current), "%016llx",
                    static_cast<unsigned long long>(fnv1a64_file(dir / rel)));
    }
    if (digest != current) drifted.push_back(rel);
  }
  return drifted;
}

ComparisonSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("experiment needs an out_dir");
  std::filesystem::create_directories(cfg.out_dir);

  auto world = stage("world", [&] {
    auto w = std::make_shared<SyntheticWorld>(generate_world(cfg.world));
    save_world(*w, cfg.out_dir / "world");
    return w;
  });

  ServiceConfig service_cfg;
  service_cfg.listen_host = cfg.listen_host;
  service_cfg.listen_port = cfg.listen_port;
  service_cfg.friend_cap = cfg.friend_cap;
  service_cfg.rate_limit = cfg.rate_limit;
  service_cfg.credentials = {
      {cfg.username, cfg.password, world->id_of.front()}};
  OsnService service(world, service_cfg);
  stage("service", [&] {
    service.start();
    return 0;
  });

  RawCrawl bfs_raw, uni_raw;
  try {
    bfs_raw = stage("bfs-crawl", [&] {
      return bfs_crawl(service.base_url(), cfg.username, cfg.password,
                       cfg.bfs, cfg.out_dir / "raw_bfs");
    });
    uni_raw = stage("uni-crawl", [&] {
      std::vector<std::vector<std::uint64_t>> queues;
      for (unsigned k = 0; k < cfg.uni.queues; ++k)
        queues.push_back(generate_uniform_queue(
            cfg.uni.queue_len, world->config.id_space_bits,
            uniform_queue_seed(cfg.uni.seed, k)));
      return uniform_crawl(service.base_url(), cfg.username, cfg.password,
                           queues, cfg.out_dir / "raw_uni");
    });
  } catch (...) {
    service.stop();
    throw;
  }
  service.stop();

  CleanGraph bfs_clean_graph = stage("clean-bfs", [&] {
    CleanGraph out = clean(bfs_raw);
    integrity_check(out);
    save_clean(out, cfg.out_dir / "clean_bfs");
    return out;
  });
  CleanGraph uni_clean_graph = stage("clean-uni", [&] {
    CleanGraph out = clean(uni_raw);
    integrity_check(out);
    save_clean(out, cfg.out_dir / "clean_uni");
    return out;
  });

  MetricsParams params;
  params.q = cfg.q;
  params.spectral_k = cfg.spectral_k;

  MetricsReport truth_report = stage("analyze-truth", [&] {
    MetricsReport r = full_report(world->graph, params);
    save_report(r, cfg.out_dir / "truth");
    return r;
  });
  MetricsReport bfs_report = stage("analyze-bfs", [&] {
    MetricsReport r = full_report(bfs_clean_graph.graph, params);
    save_report(r, cfg.out_dir / "bfs");
    return r;
  });
  MetricsReport uni_report = stage("analyze-uni", [&] {
    if (uni_clean_graph.graph.node_count() == 0)
      throw Error("uniform sample is empty; enlarge the queues");
    MetricsReport r = full_report(uni_clean_graph.graph, params);
    save_report(r, cfg.out_dir / "uni");
    return r;
  });

  ComparisonSummary summary = stage("compare", [&] {
    ExperimentConfig resolved = cfg;
    resolved.world = world->config;  // id_space_bits now concrete
    ComparisonSummary s =
        compare_reports(bfs_report, uni_report, truth_report,
                        sample_stats(bfs_raw), sample_stats(uni_raw), resolved);
    save_summary(s, cfg.out_dir / "summary");
    return s;
  });

  write_manifest(cfg.out_dir);
  return summary;
}

}  // namespace osnlab
