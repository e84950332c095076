#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osnlab/kv_file.hpp"

namespace osnlab {

enum class VisitOutcome { visited, not_found, private_profile, error };

std::string to_string(VisitOutcome outcome);
VisitOutcome visit_outcome_from_string(const std::string& s);

/// One friend-list request and what came back. depth is the BFS discovery
/// depth; -1 for uniform-crawl attempts.
struct VisitRecord {
  std::uint64_t id = 0;
  VisitOutcome outcome = VisitOutcome::error;
  std::uint64_t degree = 0;  // entries returned (capped), 0 unless visited
  bool truncated = false;
  int depth = -1;

  friend bool operator==(const VisitRecord&, const VisitRecord&) = default;
};

/// Stop conditions for a crawl; 0 means unlimited. At least one budget
/// must be finite.
struct CrawlLimits {
  unsigned max_depth = 3;    // visited levels: depths 0..max_depth-1
  double max_seconds = 0;
  std::uint64_t max_visited = 0;  // attempts budget

  void validate() const;
};

struct QueueStats {
  std::uint64_t enqueued = 0;
  std::uint64_t dequeued = 0;
};

/// Append-only harvest of a crawl: every (visited, friend) observation in
/// discovery order plus the per-attempt log.
struct RawCrawl {
  std::string kind;  // "bfs" or "uni"
  std::vector<std::pair<std::uint64_t, std::uint64_t>> observations;
  std::vector<VisitRecord> visits;
  QueueStats queue;
  std::uint64_t throttled_429 = 0;
  std::uint64_t retried_errors = 0;
  bool completed = false;
  KvFile meta;  // config echo: endpoint, limits, queue seeds, ...

  std::uint64_t visited_count() const;
  std::uint64_t count(VisitOutcome outcome) const;
};

/// Tuning for transport failure handling. The retry schedule for 5xx and
/// transport errors is attempts with exponentially growing pauses; 429
/// responses honor Retry-After and do not count as attempts.
struct CrawlerOptions {
  int server_error_attempts = 3;
  double backoff_base_seconds = 0.5;
  double http_timeout_seconds = 30.0;
};

/// BFS agent: logs in, visits the seed profile and expands a FIFO frontier.
/// Nodes discovered at depth max_depth are recorded as observations but
/// never visited. If out_dir is given the harvest is flushed incrementally
/// (crash-safe, resumable).
RawCrawl bfs_crawl(const std::string& base_url, const std::string& username,
                   const std::string& password, const CrawlLimits& limits,
                   const std::optional<std::filesystem::path>& out_dir,
                   const CrawlerOptions& options = {});

/// count ids uniform in [0, 2^id_space_bits), reproducible per seed.
std::vector<std::uint64_t> generate_uniform_queue(std::size_t count,
                                                  unsigned id_space_bits,
                                                  std::uint64_t seed);

/// Derives the per-queue seeds used by uniform_crawl for a base seed.
std::uint64_t uniform_queue_seed(std::uint64_t base_seed, unsigned queue_index);

/// Rejection-sampling crawler: one agent per queue, run concurrently, each
/// walking its queue in order. The merged harvest concatenates per-agent
/// records in queue order.
RawCrawl uniform_crawl(const std::string& base_url, const std::string& username,
                       const std::string& password,
                       const std::vector<std::vector<std::uint64_t>>& queues,
                       const std::optional<std::filesystem::path>& out_dir,
                       const CrawlerOptions& options = {});

/// Loads a harvest from disk, truncating any corrupt tail records (warns).
RawCrawl load_raw(const std::filesystem::path& dir);

/// One-shot write of an in-memory harvest.
void save_raw(const RawCrawl& crawl, const std::filesystem::path& dir);

/// Continues an interrupted BFS crawl in dir by replaying the persisted
/// visit log to rebuild the frontier, then crawling on. An empty dir
/// starts fresh; a completed crawl is returned as-is. max_visited counts
/// attempts across the whole crawl's life; max_depth must match the
/// original run.
RawCrawl resume_bfs(const std::string& base_url, const std::string& username,
                    const std::string& password, const CrawlLimits& limits,
                    const std::filesystem::path& dir,
                    const CrawlerOptions& options = {});

/// Continues an interrupted uniform crawl: each agent restarts at its
/// recorded queue position (queues are persisted alongside the harvest).
/// An empty dir starts fresh with the given queues; a completed crawl is
/// returned as-is.
RawCrawl resume_uniform(const std::string& base_url,
                        const std::string& username,
                        const std::string& password,
                        const std::vector<std::vector<std::uint64_t>>& queues,
                        const std::filesystem::path& dir,
                        const CrawlerOptions& options = {});

}  // namespace osnlab
