#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgemb/graph.hpp"

namespace kgemb {

struct WalkConfig {
  std::size_t walks_per_node = 10;  // W
  std::size_t walk_length = 20;     // L, counts nodes including the start
  double return_param = 1.0;        // p
  double inout_param = 1.0;         // q
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

using Metapath = std::vector<SemanticGroup>;

struct StartGroupMismatch : std::runtime_error {
  StartGroupMismatch() : std::runtime_error("walk start node does not match metapath head") {}
};

struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;
  std::unordered_map<NodeId, std::size_t> vocabulary_counts;

  std::size_t total_tokens() const;
  std::size_t max_id() const;

  // one walk per line, space-separated dense node ids; config sidecar at path + ".meta.json"
  void save(const std::string& path, const std::string& config_json = "{}") const;
  static WalkCorpus load(const std::string& path);
};

enum class WalkEngineKind { Node2vec, Metapath };

// Second-order biased walk: from v with previous node t, neighbor x is weighted
// 1/p if x == t, 1 if x is adjacent to t, 1/q otherwise.
std::vector<NodeId> node2vec_walk(const ConceptGraph& graph, NodeId start,
                                  const WalkConfig& config, std::mt19937_64& rng);

// Uniform walk constrained to the cyclic semantic-group pattern; truncates when
// no neighbor matches the next group.
std::vector<NodeId> metapath_walk(const ConceptGraph& graph, NodeId start,
                                  const Metapath& pattern, std::size_t length,
                                  std::mt19937_64& rng);

WalkCorpus generate_corpus(const ConceptGraph& graph, WalkEngineKind engine,
                           const WalkConfig& config,
                           const std::optional<Metapath>& metapath = std::nullopt);

}  // namespace kgemb
