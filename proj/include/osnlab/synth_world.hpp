#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "osnlab/graph.hpp"

namespace osnlab {

/// Knobs for the ground-truth population.
///
/// id_space_bits = 0 derives ceil(log2(n_users)) + density_exponent, which
/// reproduces the real-world regime (2^29 users spread over 2^32 ids gives
/// a hit every 2^density_exponent probes) at any world size.
struct WorldConfig {
  std::uint64_t n_users = 0;
  double gamma = 2.5;
  std::uint64_t min_degree = 1;
  std::uint64_t max_degree = 100;
  unsigned id_space_bits = 0;
  unsigned density_exponent = 3;
  double privacy_fraction = 0.266;
  double isolated_fraction = 0.01;  // zero-friend accounts
  std::uint64_t rng_seed = 1;

  unsigned effective_id_space_bits() const;
  void validate() const;
};

/// Ground-truth synthetic OSN: full friendship graph over node indices
/// 0..n-1, a sparse uniform id assignment and per-node privacy flags.
/// Immutable once generated; safe for concurrent reads.
struct SyntheticWorld {
  WorldConfig config;  // echoed with id_space_bits resolved
  SocialGraph graph;   // node ids are indices 0..n-1
  std::vector<std::uint64_t> id_of;     // index -> assigned id
  std::vector<std::uint8_t> is_private; // index -> flag
  std::unordered_map<std::uint64_t, std::uint32_t> index_of_id;

  struct GenStats {
    std::uint64_t stubs_total = 0;
    std::uint64_t stubs_lost = 0;  // erased by self-loop/parallel pairs
    double target_mean_degree = 0; // analytic, isolated mass included
    std::vector<std::uint32_t> target_degrees;  // sampled sequence (oracle)
  };
  GenStats gen;

  bool is_id_assigned(std::uint64_t id) const {
    return index_of_id.count(id) != 0;
  }
  std::size_t index_for_id(std::uint64_t id) const;  // throws NotFoundError
  std::size_t ground_truth_degree(std::uint64_t id) const;
  bool privacy_of(std::uint64_t id) const;
  double mean_degree() const {
    return graph.node_count() == 0
               ? 0.0
               : 2.0 * double(graph.edge_count()) / double(graph.node_count());
  }
};

/// Erased configuration model: degree targets from P(k) ~ k^-gamma on
/// [min_degree, max_degree] (an isolated_fraction of nodes gets target 0),
/// stubs paired uniformly, self-loops and parallel edges dropped. Ids are
/// drawn without replacement, uniform over the id space, independent of
/// degree. An exact count round(privacy_fraction * n) of nodes, chosen
/// uniformly, is flagged private. Deterministic per (config, seed).
SyntheticWorld generate_world(const WorldConfig& cfg);

/// World on disk: world.config (key=value echo), manifest.tsv
/// (index, assigned_id, private) and edges.tsv (canonical index pairs).
void save_world(const SyntheticWorld& world, const std::filesystem::path& dir);
SyntheticWorld load_world(const std::filesystem::path& dir);

}  // namespace osnlab
