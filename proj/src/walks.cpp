#include "kgemb/walks.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "kgemb/util.hpp"

namespace kgemb {

std::size_t WalkCorpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& w : walks) n += w.size();
  return n;
}

std::size_t WalkCorpus::max_id() const {
  std::size_t m = 0;
  for (const auto& [id, _] : vocabulary_counts) m = std::max(m, std::size_t(id));
  return m;
}

void WalkCorpus::save(const std::string& path, const std::string& config_json) const {
  std::ostringstream out;
  for (const auto& w : walks) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) out << ' ';
      out << w[i];
    }
    out << '\n';
  }
  write_file(path, out.str());
  write_file(path + ".meta.json", config_json + "\n");
}

WalkCorpus WalkCorpus::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  WalkCorpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<NodeId> walk;
    NodeId id;
    while (ss >> id) {
      walk.push_back(id);
      ++c.vocabulary_counts[id];
    }
    c.walks.push_back(std::move(walk));
  }
  return c;
}

std::vector<NodeId> node2vec_walk(const ConceptGraph& graph, NodeId start,
                                  const WalkConfig& config, std::mt19937_64& rng) {
  std::vector<NodeId> walk{start};
  if (config.walk_length <= 1) return walk;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> weights;
  while (walk.size() < config.walk_length) {
    NodeId cur = walk.back();
    auto nbrs = graph.neighbors(cur);
    if (nbrs.empty()) break;
    std::size_t chosen;
    if (walk.size() == 1) {
      chosen = std::uniform_int_distribution<std::size_t>(0, nbrs.size() - 1)(rng);
    } else {
      NodeId prev = walk[walk.size() - 2];
      weights.resize(nbrs.size());
      double total = 0;
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        NodeId x = nbrs[i];
        double w;
        if (x == prev) w = 1.0 / config.return_param;
        else if (graph.has_undirected_edge(prev, x)) w = 1.0;
        else w = 1.0 / config.inout_param;
        weights[i] = w;
        total += w;
      }
      double r = unit(rng) * total;
      chosen = 0;
      for (; chosen + 1 < nbrs.size(); ++chosen) {
        r -= weights[chosen];
        if (r <= 0) break;
      }
    }
    walk.push_back(nbrs[chosen]);
  }
  return walk;
}

namespace {

// The group cycle the walk follows; a closed pattern (first == last) does not
// repeat its head at the seam.
std::vector<SemanticGroup> pattern_cycle(const Metapath& pattern) {
  if (pattern.size() < 2) throw std::invalid_argument("metapath needs at least two groups");
  std::vector<SemanticGroup> cycle(pattern.begin(), pattern.end());
  if (cycle.front() == cycle.back()) cycle.pop_back();
  return cycle;
}

}  // namespace

std::vector<NodeId> metapath_walk(const ConceptGraph& graph, NodeId start,
                                  const Metapath& pattern, std::size_t length,
                                  std::mt19937_64& rng) {
  auto cycle = pattern_cycle(pattern);
  if (graph.node(start).group != cycle[0]) throw StartGroupMismatch();

  std::vector<NodeId> walk{start};
  std::vector<NodeId> candidates;
  while (walk.size() < length) {
    SemanticGroup want = cycle[walk.size() % cycle.size()];
    candidates.clear();
    for (NodeId x : graph.neighbors(walk.back())) {
      if (graph.node(x).group == want) candidates.push_back(x);
    }
    if (candidates.empty()) break;
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
    walk.push_back(candidates[i]);
  }
  return walk;
}

WalkCorpus generate_corpus(const ConceptGraph& graph, WalkEngineKind engine,
                           const WalkConfig& config,
                           const std::optional<Metapath>& metapath) {
  if (engine == WalkEngineKind::Metapath && !metapath)
    throw std::invalid_argument("metapath engine requires a pattern");

  std::vector<NodeId> starts;
  if (engine == WalkEngineKind::Node2vec) {
    starts.resize(graph.num_nodes());
    for (NodeId i = 0; i < graph.num_nodes(); ++i) starts[i] = i;
  } else {
    auto cycle = pattern_cycle(*metapath);
    for (NodeId i = 0; i < graph.num_nodes(); ++i)
      if (graph.node(i).group == cycle[0]) starts.push_back(i);
  }

  const std::size_t workers = std::max<std::size_t>(1, config.workers);
  std::vector<std::vector<std::vector<NodeId>>> shards(workers);

  auto run_shard = [&](std::size_t wid) {
    auto rng = make_rng(config.seed ^ wid);
    auto& out = shards[wid];
    for (std::size_t s = wid; s < starts.size(); s += workers) {
      for (std::size_t w = 0; w < config.walks_per_node; ++w) {
        if (engine == WalkEngineKind::Node2vec)
          out.push_back(node2vec_walk(graph, starts[s], config, rng));
        else
          out.push_back(metapath_walk(graph, starts[s], *metapath, config.walk_length, rng));
      }
    }
  };

  if (workers == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_shard, w);
    for (auto& t : pool) t.join();
  }

  WalkCorpus corpus;
  for (auto& shard : shards)
    for (auto& walk : shard) {
      for (NodeId id : walk) ++corpus.vocabulary_counts[id];
      corpus.walks.push_back(std::move(walk));
    }
  return corpus;
}

}  // namespace kgemb
