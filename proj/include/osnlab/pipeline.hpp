#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osnlab/crawl.hpp"
#include "osnlab/graph.hpp"

namespace osnlab {

/// 48-bit pseudonymized id (value < 2^48).
using AnonId = std::uint64_t;

inline constexpr AnonId kAphash48Seed = 0xAAAAAAAAAAAAULL;
inline constexpr const char* kAphash48Name = "aphash48-v1";

/// Hybrid additive-rotative hash over the key bytes, all arithmetic mod
/// 2^48. Bit-exact across platforms; datasets hashed by independent
/// implementations of the same recurrence interchange.
AnonId aphash48(std::string_view key);

/// Hash of a numeric id in its canonical byte form: decimal digits, no
/// leading zeros.
AnonId aphash48_u64(std::uint64_t raw_id);

/// Deduplicated, anonymized sample graph plus the cleaning counters.
struct CleanGraph {
  SocialGraph graph;  // node ids are AnonId values
  std::uint64_t total_observations = 0;
  std::uint64_t duplicate_edges_removed = 0;
  std::uint64_t collisions_detected = 0;  // raw-id pairs sharing a digest
  std::vector<std::pair<std::uint64_t, std::uint64_t>> collision_pairs;
  std::string hash_name = kAphash48Name;

  double duplicate_fraction() const {
    return total_observations == 0
               ? 0.0
               : static_cast<double>(duplicate_edges_removed) /
                     static_cast<double>(total_observations);
  }
};

/// Maps every raw id through aphash48, collapses duplicate and reversed
/// observations, drops post-hash self-loops as collisions and reports the
/// counts. Expected O(n) in the number of observations.
CleanGraph clean(const RawCrawl& raw);

/// clean with an injectable id mapping. identity_mapper makes clean a pure
/// dedup pass (used to re-clean already-anonymized edge lists, under which
/// clean is idempotent); tests use engineered mappers to force collisions.
CleanGraph clean_with(const RawCrawl& raw,
                      const std::function<AnonId(std::uint64_t)>& mapper,
                      const std::string& hash_name);

AnonId identity_mapper(std::uint64_t raw_id);

struct IntegrityReport {
  std::uint64_t n_nodes = 0;
  std::uint64_t n_edges = 0;
  std::uint64_t isolated_nodes = 0;
  std::uint64_t duplicate_edges_removed = 0;
  double duplicate_fraction = 0.0;
  std::uint64_t collisions_detected = 0;
};

/// Verifies every SocialGraph invariant on the cleaned graph (throws
/// IntegrityError listing offenders) and summarizes the counts.
IntegrityReport integrity_check(const CleanGraph& g);

/// Induced subgraph on every node within `radius` hops of center.
SocialGraph extract_ego_network(const SocialGraph& g, NodeId center,
                                int radius);

/// CleanGraph on disk: canonical edges.tsv, lossless graph.graphml (keeps
/// isolated nodes) and a flat key=value report.
void save_clean(const CleanGraph& g, const std::filesystem::path& dir);

/// Loads a graph for analysis: .graphml documents pass through the GraphML
/// reader, anything else is read as a TAB edge list.
SocialGraph load_graph_file(const std::filesystem::path& path);

}  // namespace osnlab
