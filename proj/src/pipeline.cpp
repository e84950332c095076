#include "osnlab/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "osnlab/error.hpp"
#include "osnlab/graphml.hpp"
#include "osnlab/kv_file.hpp"

namespace osnlab {

namespace {

constexpr std::uint64_t kMask48 = 0xFFFFFFFFFFFFULL;

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    std::uint64_t h = p.first * 0x9E3779B97F4A7C15ULL;
    h ^= p.second + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

AnonId aphash48(std::string_view key) {
  std::uint64_t h = kAphash48Seed;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const std::uint64_t b = static_cast<unsigned char>(key[i]);
    if ((i & 1) == 0) {
      h ^= ((h << 7) & kMask48) ^ ((b * (h >> 3)) & kMask48);
    } else {
      h ^= (~(((h << 11) & kMask48) + (b ^ (h >> 5)))) & kMask48;
    }
  }
  return h & kMask48;
}

AnonId aphash48_u64(std::uint64_t raw_id) {
  char buf[21];
  int len = std::snprintf(buf, sizeof(buf), "%llu",
                          static_cast<unsigned long long>(raw_id));
  return aphash48(std::string_view(buf, static_cast<std::size_t>(len)));
}

AnonId identity_mapper(std::uint64_t raw_id) { return raw_id; }

CleanGraph clean(const RawCrawl& raw) {
  return clean_with(raw, aphash48_u64, kAphash48Name);
}

CleanGraph clean_with(const RawCrawl& raw,
                      const std::function<AnonId(std::uint64_t)>& mapper,
                      const std::string& hash_name) {
  CleanGraph out;
  out.hash_name = hash_name;
  out.total_observations = raw.observations.size();

  // Memoized digests plus first-owner tracking: a digest owned by a
  // different raw id is an observable collision, logged once per raw pair.
  std::unordered_map<std::uint64_t, AnonId> digest_of;
  std::unordered_map<AnonId, std::uint64_t> owner_of;
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash>
      collision_seen;
  digest_of.reserve(raw.observations.size());

  auto map_id = [&](std::uint64_t raw_id) {
    auto it = digest_of.find(raw_id);
    if (it != digest_of.end()) return it->second;
    AnonId digest = mapper(raw_id);
    digest_of.emplace(raw_id, digest);
    auto [owner, inserted] = owner_of.emplace(digest, raw_id);
    if (!inserted && owner->second != raw_id) {
      auto pair = std::minmax(owner->second, raw_id);
      if (collision_seen.insert({pair.first, pair.second}).second) {
        ++out.collisions_detected;
        out.collision_pairs.emplace_back(pair.first, pair.second);
      }
    }
    return digest;
  };

  SocialGraph::Builder builder;
  builder.reserve_edges(raw.observations.size());
  for (const auto& [visited_raw, friend_raw] : raw.observations) {
    AnonId a = map_id(visited_raw);
    AnonId b = map_id(friend_raw);
    if (a == b) {
      // Distinct raw endpoints on one digest: post-hash self-loop. Recorded
      // by map_id above; the edge itself is dropped.
      continue;
    }
    builder.add_edge(a, b);
  }
  // Visited profiles belong to the sample even when their friend list came
  // back empty; they surface as isolated nodes.
  for (const VisitRecord& visit : raw.visits) {
    if (visit.outcome == VisitOutcome::visited) builder.add_node(map_id(visit.id));
  }

  out.graph = builder.build();
  out.duplicate_edges_removed = builder.duplicates_collapsed();
  return out;
}

IntegrityReport integrity_check(const CleanGraph& g) {
  g.graph.validate();  // throws IntegrityError on any violation

  IntegrityReport report;
  report.n_nodes = g.graph.node_count();
  report.n_edges = g.graph.edge_count();
  for (std::size_t i = 0; i < g.graph.node_count(); ++i)
    if (g.graph.degree_at(i) == 0) ++report.isolated_nodes;
  report.duplicate_edges_removed = g.duplicate_edges_removed;
  report.duplicate_fraction = g.duplicate_fraction();
  report.collisions_detected = g.collisions_detected;
  return report;
}

SocialGraph extract_ego_network(const SocialGraph& g, NodeId center,
                                int radius) {
  if (!g.has_node(center))
    throw NotFoundError("ego center " + std::to_string(center) +
                        " not in graph");
  if (radius < 1 || radius > 2)
    throw ConfigError("ego radius must be 1 or 2");

  // Ball of the given radius around the center.
  std::unordered_map<NodeId, int> dist;
  dist.emplace(center, 0);
  std::deque<NodeId> frontier{center};
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop_front();
    int d = dist.at(v);
    if (d == radius) continue;
    for (NodeId w : g.neighbors(v)) {
      if (dist.emplace(w, d + 1).second) frontier.push_back(w);
    }
  }

  SocialGraph::Builder builder;
  for (const auto& [v, d] : dist) {
    builder.add_node(v);
    for (NodeId w : g.neighbors(v)) {
      if (v < w && dist.count(w)) builder.add_edge(v, w);
    }
  }
  return builder.build();
}

void save_clean(const CleanGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edge_list(g.graph, dir / "edges.tsv");
  write_graphml(g.graph, dir / "graph.graphml");

  IntegrityReport integrity = integrity_check(g);
  KvFile report;
  report.set("hash", g.hash_name);
  report.set_u64("n_nodes", integrity.n_nodes);
  report.set_u64("n_edges", integrity.n_edges);
  report.set_u64("isolated_nodes", integrity.isolated_nodes);
  report.set_u64("total_observations", g.total_observations);
  report.set_u64("duplicate_edges_removed", g.duplicate_edges_removed);
  report.set_double("duplicate_fraction", g.duplicate_fraction());
  report.set_u64("collisions_detected", g.collisions_detected);
  report.save(dir / "report");

  if (!g.collision_pairs.empty()) {
    std::ofstream out(dir / "collisions.tsv");
    for (const auto& [a, b] : g.collision_pairs)
      out << a << '\t' << b << '\n';
  }
}

SocialGraph load_graph_file(const std::filesystem::path& path) {
  if (path.extension() == ".graphml") return read_graphml(path);
  return read_edge_list(path);
}

}  // namespace osnlab
