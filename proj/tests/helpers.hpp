#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kgemb/graph.hpp"
#include "kgemb/rrf.hpp"

namespace kgemb::test {

inline std::string mrconso_line(const std::string& cui, const std::string& name,
                                const std::string& lang = "ENG",
                                const std::string& scui = "") {
  std::vector<std::string> f(18);
  f[0] = cui;
  f[1] = lang;
  f[9] = scui;
  f[13] = scui.empty() ? ("code_" + cui) : scui;
  f[14] = name;
  std::string line;
  for (auto& x : f) line += x + "|";
  return line + "\n";
}

inline std::string mrsty_line(const std::string& cui, const std::string& sty) {
  std::vector<std::string> f(6);
  f[0] = cui;
  f[1] = "T000";
  f[3] = sty;
  std::string line;
  for (auto& x : f) line += x + "|";
  return line + "\n";
}

inline std::string mrrel_line(const std::string& cui1, const std::string& cui2,
                              const std::string& rela, const std::string& rel = "RO") {
  std::vector<std::string> f(16);
  f[0] = cui1;
  f[3] = rel;
  f[4] = rela;
  f[5] = cui2;
  std::string line;
  for (auto& x : f) line += x + "|";
  return line + "\n";
}

// Plain graph builder: node i named Ni, all DISO unless a group vector is given.
inline ConceptGraph make_graph(std::size_t n,
                               const std::vector<std::pair<NodeId, NodeId>>& edges,
                               const std::vector<SemanticGroup>& groups = {},
                               const std::vector<std::string>& types = {}) {
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    GraphNode node;
    node.cui = "C" + std::to_string(i);
    node.name = "N" + std::to_string(i);
    node.group = groups.empty() ? SemanticGroup::DISO : groups[i];
    node.semantic_type = types.empty() ? std::string("Disease or Syndrome") : types[i];
    nodes.push_back(node);
  }
  std::vector<GraphEdge> es;
  for (auto [a, b] : edges) es.push_back({a, b, "related_to", false});
  return ConceptGraph::build(nodes, es);
}

// Two k-cliques joined by one bridge; node < k is cluster 0.
inline ConceptGraph two_clique_graph(std::size_t k) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < k; ++a)
    for (NodeId b = a + 1; b < k; ++b) {
      edges.push_back({a, b});
      edges.push_back({NodeId(k + a), NodeId(k + b)});
    }
  edges.push_back({0, NodeId(k)});
  return make_graph(2 * k, edges);
}

// Rooted taxonomy: root, `branching` children, each with (n-1-branching)/branching
// leaves. Returns parent array via out param.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> taxonomy_edges(
    std::size_t branching, std::size_t leaves_per_child, std::vector<int>* parent = nullptr) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::size_t n = 1 + branching + branching * leaves_per_child;
  std::vector<int> par(n, -1);
  std::uint32_t next = 1;
  for (std::size_t c = 0; c < branching; ++c) {
    std::uint32_t child = next++;
    edges.push_back({child, 0});  // (node, parent): "isa" points up
    par[child] = 0;
  }
  for (std::size_t c = 0; c < branching; ++c) {
    std::uint32_t child = 1 + std::uint32_t(c);
    for (std::size_t l = 0; l < leaves_per_child; ++l) {
      std::uint32_t leaf = next++;
      edges.push_back({leaf, child});
      par[leaf] = int(child);
    }
  }
  if (parent) *parent = par;
  return edges;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("kgemb_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace kgemb::test
