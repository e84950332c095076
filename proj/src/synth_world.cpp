#include "osnlab/synth_world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <unordered_set>

#include "osnlab/error.hpp"
#include "osnlab/kv_file.hpp"
#include "osnlab/rng.hpp"

namespace osnlab {

namespace {

unsigned ceil_log2(std::uint64_t n) {
  unsigned bits = 0;
  while ((std::uint64_t(1) << bits) < n && bits < 64) ++bits;
  return bits;
}

// Distinct seed streams so a change in one stage never perturbs another.
enum Stream : std::uint64_t {
  kDegrees = 1,
  kIsolated,
  kStubs,
  kPrivacy,
  kIds,
  kOddFix,
};

/// Inverse-CDF sampler for P(k) ~ k^-gamma on [lo, hi].
class PowerLawSampler {
 public:
  PowerLawSampler(double gamma, std::uint64_t lo, std::uint64_t hi) : lo_(lo) {
    cumulative_.reserve(hi - lo + 1);
    double total = 0;
    for (std::uint64_t k = lo; k <= hi; ++k) {
      total += std::pow(static_cast<double>(k), -gamma);
      cumulative_.push_back(total);
    }
    mean_ = 0;
    double prev = 0;
    for (std::uint64_t k = lo; k <= hi; ++k) {
      mean_ += double(k) * (cumulative_[k - lo] - prev) / total;
      prev = cumulative_[k - lo];
    }
  }

  std::uint64_t sample(Rng& rng) const {
    const double u = rng.unit() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return lo_ + static_cast<std::uint64_t>(it - cumulative_.begin());
  }

  double mean() const { return mean_; }

 private:
  std::uint64_t lo_;
  std::vector<double> cumulative_;
  double mean_ = 0;
};

}  // namespace

unsigned WorldConfig::effective_id_space_bits() const {
  if (id_space_bits != 0) return id_space_bits;
  return std::min(64u, ceil_log2(n_users) + density_exponent);
}

void WorldConfig::validate() const {
  if (n_users == 0) throw ConfigError("n_users must be positive");
  if (gamma <= 1.0) throw ConfigError("gamma must exceed 1");
  if (min_degree < 1) throw ConfigError("min_degree must be positive");
  if (min_degree > max_degree)
    throw ConfigError("min_degree must not exceed max_degree");
  if (max_degree >= n_users)
    throw ConfigError("max_degree must be below n_users");
  if (privacy_fraction < 0 || privacy_fraction > 1)
    throw ConfigError("privacy_fraction must be in [0, 1]");
  if (isolated_fraction < 0 || isolated_fraction > 1)
    throw ConfigError("isolated_fraction must be in [0, 1]");
  const unsigned bits = effective_id_space_bits();
  if (bits == 0 || bits > 64)
    throw ConfigError("id_space_bits must be in [1, 64]");
  if (bits < 64 && n_users > (std::uint64_t(1) << bits))
    throw ConfigError("n_users exceeds the id space");
}

std::size_t SyntheticWorld::index_for_id(std::uint64_t id) const {
  auto it = index_of_id.find(id);
  if (it == index_of_id.end())
    throw NotFoundError("id " + std::to_string(id) + " is not assigned");
  return it->second;
}

std::size_t SyntheticWorld::ground_truth_degree(std::uint64_t id) const {
  return graph.degree_at(index_for_id(id));
}

bool SyntheticWorld::privacy_of(std::uint64_t id) const {
  return is_private[index_for_id(id)] != 0;
}

SyntheticWorld generate_world(const WorldConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = cfg.n_users;

  SyntheticWorld world;
  world.config = cfg;
  world.config.id_space_bits = cfg.effective_id_space_bits();

  // Degree targets.
  PowerLawSampler sampler(cfg.gamma, cfg.min_degree, cfg.max_degree);
  std::vector<std::uint32_t> target(n);
  {
    Rng rng(derive_seed(cfg.rng_seed, kDegrees));
    for (auto& t : target)
      t = static_cast<std::uint32_t>(sampler.sample(rng));
  }
  const std::uint64_t n_isolated =
      static_cast<std::uint64_t>(std::llround(cfg.isolated_fraction * double(n)));
  if (n_isolated > 0) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.rng_seed, kIsolated));
    rng.shuffle(order);
    for (std::uint64_t i = 0; i < n_isolated; ++i) target[order[i]] = 0;
  }
  world.gen.target_mean_degree =
      sampler.mean() * (1.0 - double(n_isolated) / double(n));

  std::uint64_t stub_total = 0;
  for (auto t : target) stub_total += t;
  if (stub_total % 2 == 1) {
    // Odd stub count: bump one random node's target by one.
    Rng rng(derive_seed(cfg.rng_seed, kOddFix));
    ++target[rng.below(n)];
    ++stub_total;
  }
  world.gen.stubs_total = stub_total;
  world.gen.target_degrees = target;

  if (double(cfg.max_degree) >
      std::sqrt(double(n) * double(cfg.min_degree)))
    std::cerr << "[osnlab] warning: max_degree above sqrt(n*min_degree); "
                 "stub erasure may exceed 5%\n";

  // Stub matching with self-loop / parallel-edge erasure.
  std::vector<std::uint32_t> stubs;
  stubs.reserve(stub_total);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint32_t t = 0; t < target[i]; ++t)
      stubs.push_back(static_cast<std::uint32_t>(i));
  {
    Rng rng(derive_seed(cfg.rng_seed, kStubs));
    rng.shuffle(stubs);
  }
  SocialGraph::Builder builder;
  builder.reserve_edges(stub_total / 2);
  for (std::uint64_t i = 0; i < n; ++i) builder.add_node(i);
  std::unordered_set<std::uint64_t> edge_keys;
  edge_keys.reserve(stub_total / 2);
  std::uint64_t erased_pairs = 0;
  for (std::size_t p = 0; p + 1 < stubs.size(); p += 2) {
    const std::uint32_t a = stubs[p];
    const std::uint32_t b = stubs[p + 1];
    if (a == b) {
      ++erased_pairs;
      continue;
    }
    const std::uint64_t key =
        (std::uint64_t(std::min(a, b)) << 32) | std::uint64_t(std::max(a, b));
    if (!edge_keys.insert(key).second) {
      ++erased_pairs;
      continue;
    }
    builder.add_edge(a, b);
  }
  world.gen.stubs_lost = 2 * erased_pairs;
  world.graph = builder.build();
  if (world.gen.stubs_total > 0 &&
      double(world.gen.stubs_lost) > 0.05 * double(world.gen.stubs_total))
    std::cerr << "[osnlab] warning: erased configuration model lost "
              << world.gen.stubs_lost << "/" << world.gen.stubs_total
              << " stubs\n";

  // Privacy flags: an exact count, uniform over nodes, so the realized
  // fraction always matches the configuration.
  world.is_private.assign(n, 0);
  const std::uint64_t n_private =
      static_cast<std::uint64_t>(std::llround(cfg.privacy_fraction * double(n)));
  if (n_private > 0) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.rng_seed, kPrivacy));
    rng.shuffle(order);
    for (std::uint64_t i = 0; i < n_private; ++i) world.is_private[order[i]] = 1;
  }

  // Uniform distinct ids: rejection against the already-drawn set. Draws
  // are iid uniform, hence independent of the degree sequence.
  const unsigned bits = world.config.id_space_bits;
  world.id_of.resize(n);
  world.index_of_id.reserve(n);
  {
    Rng rng(derive_seed(cfg.rng_seed, kIds));
    std::unordered_set<std::uint64_t> used;
    used.reserve(n * 2);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint64_t id;
      do {
        id = rng.bits(bits);
      } while (!used.insert(id).second);
      world.id_of[i] = id;
      world.index_of_id.emplace(id, static_cast<std::uint32_t>(i));
    }
  }
  return world;
}

void save_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  KvFile kv;
  kv.set_u64("n_users", world.config.n_users);
  kv.set_double("gamma", world.config.gamma);
  kv.set_u64("min_degree", world.config.min_degree);
  kv.set_u64("max_degree", world.config.max_degree);
  kv.set_u64("id_space_bits", world.config.id_space_bits);
  kv.set_u64("density_exponent", world.config.density_exponent);
  kv.set_double("privacy_fraction", world.config.privacy_fraction);
  kv.set_double("isolated_fraction", world.config.isolated_fraction);
  kv.set_u64("rng_seed", world.config.rng_seed);
  kv.set_u64("stubs_total", world.gen.stubs_total);
  kv.set_u64("stubs_lost", world.gen.stubs_lost);
  kv.set_double("target_mean_degree", world.gen.target_mean_degree);
  kv.set_double("realized_mean_degree", world.mean_degree());
  kv.set_u64("n_edges", world.graph.edge_count());
  kv.save(dir / "world.config");

  {
    std::ofstream out(dir / "manifest.tsv", std::ios::trunc);
    for (std::size_t i = 0; i < world.id_of.size(); ++i)
      out << i << '\t' << world.id_of[i] << '\t'
          << (world.is_private[i] ? 1 : 0) << '\n';
    if (!out.flush())
      throw Error("cannot write " + (dir / "manifest.tsv").string());
  }
  write_edge_list(world.graph, dir / "edges.tsv");
}

SyntheticWorld load_world(const std::filesystem::path& dir) {
  KvFile kv = KvFile::load(dir / "world.config");
  SyntheticWorld world;
  world.config.n_users = kv.require_u64("n_users");
  world.config.gamma = kv.require_double("gamma");
  world.config.min_degree = kv.require_u64("min_degree");
  world.config.max_degree = kv.require_u64("max_degree");
  world.config.id_space_bits =
      static_cast<unsigned>(kv.require_u64("id_space_bits"));
  world.config.density_exponent =
      static_cast<unsigned>(kv.require_u64("density_exponent"));
  world.config.privacy_fraction = kv.require_double("privacy_fraction");
  world.config.isolated_fraction = kv.get_double("isolated_fraction", 0.0);
  world.config.rng_seed = kv.require_u64("rng_seed");
  world.gen.stubs_total = kv.get_u64("stubs_total", 0);
  world.gen.stubs_lost = kv.get_u64("stubs_lost", 0);
  world.gen.target_mean_degree = kv.get_double("target_mean_degree", 0.0);

  const std::uint64_t n = world.config.n_users;
  world.id_of.resize(n);
  world.is_private.assign(n, 0);
  world.index_of_id.reserve(n);
  {
    std::ifstream in(dir / "manifest.tsv");
    if (!in) throw Error("cannot read " + (dir / "manifest.tsv").string());
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t rows = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::uint64_t index = 0, id = 0, priv = 0;
      if (std::sscanf(line.c_str(), "%llu\t%llu\t%llu",
                      reinterpret_cast<unsigned long long*>(&index),
                      reinterpret_cast<unsigned long long*>(&id),
                      reinterpret_cast<unsigned long long*>(&priv)) != 3 ||
          index >= n)
        throw ParseError("manifest.tsv", line_no, "bad manifest row");
      world.id_of[index] = id;
      world.is_private[index] = priv ? 1 : 0;
      world.index_of_id.emplace(id, static_cast<std::uint32_t>(index));
      ++rows;
    }
    if (rows != n)
      throw Error("manifest.tsv has " + std::to_string(rows) +
                  " rows, expected " + std::to_string(n));
  }

  SocialGraph::Builder builder;
  for (std::uint64_t i = 0; i < n; ++i) builder.add_node(i);
  EdgeListStats stats;
  SocialGraph from_file = read_edge_list(dir / "edges.tsv", &stats);
  for (const EdgeRecord& e : from_file.edges()) builder.add_edge(e);
  world.graph = builder.build();
  if (world.graph.node_count() != n)
    throw Error("edge list references nodes outside the manifest");
  return world;
}

}  // namespace osnlab
