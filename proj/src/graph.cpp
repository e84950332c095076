#include "osnlab/graph.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "osnlab/error.hpp"

namespace osnlab {

EdgeRecord canonicalize_edge(NodeId u, NodeId v) {
  if (u == v)
    throw SelfLoopError("self-loop rejected: node " + std::to_string(u));
  return u < v ? EdgeRecord{u, v} : EdgeRecord{v, u};
}

SocialGraph::Builder& SocialGraph::Builder::add_node(NodeId v) {
  extra_nodes_.push_back(v);
  return *this;
}

SocialGraph::Builder& SocialGraph::Builder::add_edge(NodeId u, NodeId v) {
  staged_.push_back(canonicalize_edge(u, v));
  return *this;
}

SocialGraph::Builder& SocialGraph::Builder::reserve_edges(std::size_t n) {
  staged_.reserve(n);
  return *this;
}

SocialGraph SocialGraph::Builder::build() {
  std::sort(staged_.begin(), staged_.end());
  auto last = std::unique(staged_.begin(), staged_.end());
  duplicates_ = static_cast<std::size_t>(staged_.end() - last);
  staged_.erase(last, staged_.end());

  SocialGraph g;
  g.nodes_.reserve(extra_nodes_.size() + staged_.size());
  for (NodeId v : extra_nodes_) g.nodes_.push_back(v);
  for (const EdgeRecord& e : staged_) {
    g.nodes_.push_back(e.u);
    g.nodes_.push_back(e.v);
  }
  std::sort(g.nodes_.begin(), g.nodes_.end());
  g.nodes_.erase(std::unique(g.nodes_.begin(), g.nodes_.end()),
                 g.nodes_.end());

  g.index_.reserve(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i)
    g.index_.emplace(g.nodes_[i], static_cast<std::uint32_t>(i));

  std::vector<std::size_t> deg(g.nodes_.size(), 0);
  for (const EdgeRecord& e : staged_) {
    ++deg[g.index_.at(e.u)];
    ++deg[g.index_.at(e.v)];
  }
  g.offsets_.assign(g.nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < deg.size(); ++i)
    g.offsets_[i + 1] = g.offsets_[i] + deg[i];
  g.adjacency_.resize(g.offsets_.back());

  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const EdgeRecord& e : staged_) {
    g.adjacency_[cursor[g.index_.at(e.u)]++] = e.v;
    g.adjacency_[cursor[g.index_.at(e.v)]++] = e.u;
  }
  // Edges were inserted in canonical sorted order, but each list mixes
  // lower and higher neighbors; sort per node.
  for (std::size_t i = 0; i < g.nodes_.size(); ++i)
    std::sort(g.adjacency_.begin() + g.offsets_[i],
              g.adjacency_.begin() + g.offsets_[i + 1]);

  g.edge_count_ = staged_.size();
  return g;
}

bool SocialGraph::has_edge(NodeId u, NodeId v) const {
  auto it = index_.find(u);
  if (it == index_.end()) return false;
  if (index_.count(v) == 0) return false;
  auto nbrs = neighbors_at(it->second);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::size_t SocialGraph::degree(NodeId v) const {
  return degree_at(index_of(v));
}

std::span<const NodeId> SocialGraph::neighbors(NodeId v) const {
  return neighbors_at(index_of(v));
}

std::size_t SocialGraph::index_of(NodeId v) const {
  auto it = index_.find(v);
  if (it == index_.end())
    throw NotFoundError("node " + std::to_string(v) + " not in graph");
  return it->second;
}

std::vector<EdgeRecord> SocialGraph::edges() const {
  std::vector<EdgeRecord> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    NodeId u = nodes_[i];
    for (NodeId v : neighbors_at(i)) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

void SocialGraph::validate() const {
  std::size_t half_edges = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    NodeId u = nodes_[i];
    auto nbrs = neighbors_at(i);
    half_edges += nbrs.size();
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      NodeId v = nbrs[j];
      if (v == u)
        throw IntegrityError("self-loop at node " + std::to_string(u));
      if (j > 0 && nbrs[j - 1] >= v)
        throw IntegrityError("adjacency of node " + std::to_string(u) +
                             " not sorted distinct");
      auto it = index_.find(v);
      if (it == index_.end())
        throw IntegrityError("edge to unknown node " + std::to_string(v));
      auto back = neighbors_at(it->second);
      if (!std::binary_search(back.begin(), back.end(), u))
        throw IntegrityError("asymmetric edge " + std::to_string(u) + "-" +
                             std::to_string(v));
    }
  }
  if (half_edges != 2 * edge_count_)
    throw IntegrityError("edge_count " + std::to_string(edge_count_) +
                         " does not match adjacency total " +
                         std::to_string(half_edges));
}

SocialGraph SocialGraph::unchecked_from_parts(std::vector<NodeId> nodes,
                                              std::vector<std::size_t> offsets,
                                              std::vector<NodeId> adjacency) {
  SocialGraph g;
  g.nodes_ = std::move(nodes);
  g.offsets_ = std::move(offsets);
  g.adjacency_ = std::move(adjacency);
  g.index_.reserve(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i)
    g.index_.emplace(g.nodes_[i], static_cast<std::uint32_t>(i));
  g.edge_count_ = g.adjacency_.size() / 2;
  return g;
}

namespace {

NodeId parse_node_token(const std::string& token, const std::string& source,
                        std::size_t line_no) {
  if (token.empty())
    throw ParseError(source, line_no, "missing field");
  errno = 0;
  char* end = nullptr;
  NodeId value = std::strtoull(token.c_str(), &end, 10);
  if (errno != 0 || end != token.c_str() + token.size())
    throw ParseError(source, line_no, "non-numeric node id '" + token + "'");
  return value;
}

}  // namespace

SocialGraph read_edge_list(const std::filesystem::path& path,
                           EdgeListStats* stats) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  const std::string source = path.filename().string();

  SocialGraph::Builder builder;
  std::size_t line_no = 0;
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(source, line_no, "missing field (expected u<TAB>v)");
    NodeId u = parse_node_token(line.substr(0, tab), source, line_no);
    NodeId v = parse_node_token(line.substr(tab + 1), source, line_no);
    try {
      builder.add_edge(u, v);
    } catch (const SelfLoopError&) {
      throw ParseError(source, line_no,
                       "self-loop " + std::to_string(u) + "-" +
                       std::to_string(v));
    }
    ++lines;
  }
  SocialGraph g = builder.build();
  if (stats) {
    stats->lines = lines;
    stats->duplicates = builder.duplicates_collapsed();
  }
  return g;
}

void write_edge_list(const SocialGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    NodeId u = g.node_at(i);
    for (NodeId v : g.neighbors_at(i)) {
      if (u < v) out << u << '\t' << v << '\n';
    }
  }
  if (!out.flush()) throw Error("write failed for " + path.string());
}

}  // namespace osnlab
