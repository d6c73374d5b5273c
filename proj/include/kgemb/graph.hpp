#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgemb/rrf.hpp"

namespace kgemb {

using NodeId = std::uint32_t;

struct GraphNode {
  std::string cui;
  std::string name;
  std::string semantic_type;
  SemanticGroup group = SemanticGroup::DISO;
};

struct GraphEdge {
  NodeId head;
  NodeId tail;
  std::string relation_type;
  bool is_hierarchical;
};

struct DuplicateCui : std::runtime_error {
  explicit DuplicateCui(const std::string& cui) : std::runtime_error("duplicate cui: " + cui) {}
};

// Immutable typed multigraph. Directed edges kept as ingested; walks and
// degree queries use a deduplicated undirected view.
class ConceptGraph {
 public:
  ConceptGraph() = default;

  static ConceptGraph build(const std::vector<GraphNode>& nodes,
                            const std::vector<GraphEdge>& edges);
  static ConceptGraph from_records(const ConceptSet& concepts,
                                   const std::vector<RelationRecord>& relations);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_undirected_edges() const { return undirected_edge_count_; }
  const GraphNode& node(NodeId id) const { return nodes_[id]; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  NodeId id_of(const std::string& cui) const;
  bool has_cui(const std::string& cui) const { return index_.count(cui) > 0; }

  // sorted neighbor ids in the undirected view
  std::span<const NodeId> neighbors(NodeId u) const;
  std::size_t degree(NodeId u) const { return neighbors(u).size(); }
  bool has_undirected_edge(NodeId u, NodeId v) const;

  std::vector<std::pair<NodeId, NodeId>> hierarchical_edges() const;
  std::unordered_map<std::string, std::size_t> group_counts() const;

  void save_snapshot(const std::string& path) const;
  static ConceptGraph load_snapshot(const std::string& path);

 private:
  std::vector<GraphNode> nodes_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<GraphEdge> edges_;
  std::vector<NodeId> adj_flat_;     // CSR over the undirected view
  std::vector<std::size_t> adj_off_;
  std::size_t undirected_edge_count_ = 0;
};

struct AllZeroWeights : std::runtime_error {
  AllZeroWeights() : std::runtime_error("alias table needs a positive weight") {}
};

// Walker's alias method for O(1) weighted categorical sampling.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  std::size_t sample(std::mt19937_64& rng) const;

  // probability mass the table assigns to index i (for verification)
  double induced_probability(std::size_t i) const;

  const std::vector<double>& probabilities() const { return prob_; }
  const std::vector<std::size_t>& aliases() const { return alias_; }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace kgemb
