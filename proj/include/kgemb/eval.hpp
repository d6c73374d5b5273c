#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgemb/embedding.hpp"
#include "kgemb/graph.hpp"

namespace kgemb {

struct MissingEmbedding : std::runtime_error {
  explicit MissingEmbedding(const std::string& cui) :
      std::runtime_error("no embedding for concept: " + cui) {}
};

struct EmptyCategory : std::runtime_error {
  explicit EmptyCategory(const std::string& cat) :
      std::runtime_error("empty bootstrap category: " + cat) {}
};

struct NegativeExhaustion : std::runtime_error {
  NegativeExhaustion() : std::runtime_error("not enough non-edges for negative sampling") {}
};

struct ClassificationDataset {
  std::vector<std::pair<NodeId, std::size_t>> items;  // (node id, label id)
  std::vector<std::string> label_names;
};

// Labels every node by its semantic type.
ClassificationDataset semantic_type_dataset(const ConceptGraph& graph);

// Multinomial logistic regression probe; returns test accuracy.
double classify_nodes(const EmbeddingTable& embeddings, const ClassificationDataset& dataset,
                      double train_fraction, std::uint64_t seed);

struct LinkDataset {
  std::vector<std::pair<NodeId, NodeId>> positives;
  std::vector<std::pair<NodeId, NodeId>> negatives;
};

LinkDataset build_link_dataset(const ConceptGraph& graph, double sample_fraction,
                               std::uint64_t seed);

struct LinkPredictionResult {
  double accuracy = 0;
  double threshold = 0;  // decision boundary on cosine similarity
};

// Linear hinge-loss classifier on the single cosine-similarity feature.
LinkPredictionResult predict_links(const EmbeddingTable& embeddings,
                                   const LinkDataset& dataset, double train_fraction,
                                   std::uint64_t seed);

struct BenchmarkPairSet {
  std::string name;  // D1..D5
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::map<NodeId, std::string> category_of;                  // semantic type
  std::map<std::string, std::vector<NodeId>> category_members;
};

// D1/D2: isa within DISO / CHEM. D3/D4: non-isa within DISO / CHEM.
// D5: any relation across DISO x CHEM. A pair with both isa and non-isa
// edges lands in the hierarchical dataset only.
std::array<BenchmarkPairSet, 5> build_benchmark_sets(const ConceptGraph& graph);

enum class SimilarityKind { Cosine, NegativePoincare };

struct PowerReport {
  std::string dataset;
  double power = 0;
  std::vector<double> null_quantiles;  // 1%, 5%, 25%, 50%, 75%, 95%, 99%
  std::size_t bootstrap_count = 0;
  std::vector<double> null_samples;  // for histogram output
};

PowerReport bootstrap_power(const EmbeddingTable& embeddings, const BenchmarkPairSet& pair_set,
                            std::size_t bootstrap_count, double alpha, std::uint64_t seed,
                            SimilarityKind similarity = SimilarityKind::Cosine);

}  // namespace kgemb
