#include "kgemb/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kgemb/util.hpp"

namespace kgemb {

ConceptGraph ConceptGraph::build(const std::vector<GraphNode>& nodes,
                                 const std::vector<GraphEdge>& edges) {
  ConceptGraph g;
  g.nodes_ = nodes;
  g.index_.reserve(nodes.size());
  for (NodeId i = 0; i < g.nodes_.size(); ++i) {
    if (!g.index_.emplace(g.nodes_[i].cui, i).second) throw DuplicateCui(g.nodes_[i].cui);
  }
  g.edges_ = edges;

  std::vector<std::set<NodeId>> adj(g.nodes_.size());
  for (const auto& e : g.edges_) {
    if (e.head == e.tail) continue;
    adj[e.head].insert(e.tail);
    adj[e.tail].insert(e.head);
  }
  g.adj_off_.resize(g.nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < adj.size(); ++i) g.adj_off_[i + 1] = g.adj_off_[i] + adj[i].size();
  g.adj_flat_.reserve(g.adj_off_.back());
  for (const auto& s : adj) g.adj_flat_.insert(g.adj_flat_.end(), s.begin(), s.end());
  g.undirected_edge_count_ = g.adj_flat_.size() / 2;
  return g;
}

ConceptGraph ConceptGraph::from_records(const ConceptSet& concepts,
                                        const std::vector<RelationRecord>& relations) {
  std::vector<GraphNode> nodes;
  nodes.reserve(concepts.concepts.size());
  for (std::size_t i = 0; i < concepts.concepts.size(); ++i) {
    const auto& c = concepts.concepts[i];
    const auto& t = concepts.types[i];
    nodes.push_back({c.cui, c.preferred_name, t.semantic_type, t.semantic_group});
  }
  std::unordered_map<std::string, NodeId> idx;
  for (NodeId i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i].cui, i);

  std::vector<GraphEdge> edges;
  edges.reserve(relations.size());
  for (const auto& r : relations) {
    edges.push_back({idx.at(r.cui_head), idx.at(r.cui_tail), r.relation_type, r.is_hierarchical});
  }
  return build(nodes, edges);
}

NodeId ConceptGraph::id_of(const std::string& cui) const {
  auto it = index_.find(cui);
  if (it == index_.end()) throw std::out_of_range("unknown cui: " + cui);
  return it->second;
}

std::span<const NodeId> ConceptGraph::neighbors(NodeId u) const {
  return {adj_flat_.data() + adj_off_[u], adj_off_[u + 1] - adj_off_[u]};
}

bool ConceptGraph::has_undirected_edge(NodeId u, NodeId v) const {
  auto n = neighbors(u);
  return std::binary_search(n.begin(), n.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> ConceptGraph::hierarchical_edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : edges_) {
    if (!e.is_hierarchical) continue;
    if (seen.insert({e.head, e.tail}).second) out.emplace_back(e.head, e.tail);
  }
  return out;
}

std::unordered_map<std::string, std::size_t> ConceptGraph::group_counts() const {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& n : nodes_) ++counts[to_string(n.group)];
  return counts;
}

void ConceptGraph::save_snapshot(const std::string& path) const {
  std::ostringstream out;
  out << "NODES\n";
  for (const auto& n : nodes_) {
    out << n.cui << '\t' << n.name << '\t' << n.semantic_type << '\t' << to_string(n.group)
        << '\n';
  }
  out << "EDGES\n";
  for (const auto& e : edges_) {
    out << nodes_[e.head].cui << '\t' << nodes_[e.tail].cui << '\t' << e.relation_type << '\t'
        << (e.is_hierarchical ? 1 : 0) << '\n';
  }
  write_file(path, out.str());
}

ConceptGraph ConceptGraph::load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  std::string line;
  enum class Section { None, Nodes, Edges } section = Section::None;
  std::vector<GraphNode> nodes;
  std::unordered_map<std::string, NodeId> idx;
  std::vector<GraphEdge> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "NODES") { section = Section::Nodes; continue; }
    if (line == "EDGES") { section = Section::Edges; continue; }
    auto f = split(line, '\t');
    if (section == Section::Nodes) {
      if (f.size() != 4) throw std::runtime_error("bad node line in snapshot: " + line);
      auto g = semantic_group_from_string(f[3]);
      if (!g) throw std::runtime_error("bad semantic group in snapshot: " + f[3]);
      idx.emplace(f[0], NodeId(nodes.size()));
      nodes.push_back({f[0], f[1], f[2], *g});
    } else if (section == Section::Edges) {
      if (f.size() != 4) throw std::runtime_error("bad edge line in snapshot: " + line);
      edges.push_back({idx.at(f[0]), idx.at(f[1]), f[2], f[3] == "1"});
    } else {
      throw std::runtime_error("snapshot data before section header");
    }
  }
  return build(nodes, edges);
}

AliasTable::AliasTable(std::span<const double> weights) {
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("negative weight");
    total += w;
  }
  if (total <= 0) throw AllZeroWeights();

  const std::size_t n = weights.size();
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    std::size_t s = small.back(); small.pop_back();
    std::size_t l = large.back(); large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;
}

std::size_t AliasTable::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, prob_.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t i = pick(rng);
  return coin(rng) < prob_[i] ? i : alias_[i];
}

double AliasTable::induced_probability(std::size_t i) const {
  const double n = double(prob_.size());
  double p = prob_[i] / n;
  for (std::size_t j = 0; j < prob_.size(); ++j) {
    if (alias_[j] == i) p += (1.0 - prob_[j]) / n;
  }
  return p;
}

}  // namespace kgemb
