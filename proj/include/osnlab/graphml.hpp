#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "osnlab/graph.hpp"

namespace osnlab {

/// Serializes g as minimal node/edge GraphML: undirected, ids only, nodes
/// in ascending id order and edges in ascending (u, v) order so output is
/// byte-stable for diffing.
std::string export_graphml(const SocialGraph& g);

/// Parses a GraphML document produced for an undirected graph. Rejects
/// malformed XML, directed edgedefault, duplicate node ids and edges that
/// reference undeclared nodes, each with a distinct message. Unknown
/// elements (key/data/desc) are skipped.
SocialGraph import_graphml(std::string_view doc,
                           const std::string& source_name = "graphml");

void write_graphml(const SocialGraph& g, const std::filesystem::path& path);
SocialGraph read_graphml(const std::filesystem::path& path);

}  // namespace osnlab
