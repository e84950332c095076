#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "osnlab/graph.hpp"
#include "osnlab/rng.hpp"

namespace osnlab::testutil {

/// G(n, p) over node ids 0..n-1 (every node present, even if isolated).
inline SocialGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  SocialGraph::Builder builder;
  for (std::size_t v = 0; v < n; ++v) builder.add_node(v);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.unit() < p) builder.add_edge(u, v);
  return builder.build();
}

/// Graph from an explicit edge list.
inline SocialGraph graph_of(std::initializer_list<std::pair<NodeId, NodeId>> edges) {
  SocialGraph::Builder builder;
  for (auto [u, v] : edges) builder.add_edge(u, v);
  return builder.build();
}

/// Fresh scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    path_ = base / ("osnlab_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace osnlab::testutil
