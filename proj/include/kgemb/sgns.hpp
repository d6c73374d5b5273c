#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgemb/embedding.hpp"
#include "kgemb/graph.hpp"
#include "kgemb/walks.hpp"

namespace kgemb {

struct SgnsConfig {
  std::size_t dimension = 100;
  std::size_t window = 5;
  std::size_t negatives_per_positive = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  double unigram_power = 0.75;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct EmptyCorpus : std::runtime_error {
  EmptyCorpus() : std::runtime_error("walk corpus is empty") {}
};

// Noise distribution P(id) proportional to count^power, sampled via alias table.
class NegativeSampler {
 public:
  NegativeSampler(const std::unordered_map<NodeId, std::size_t>& vocabulary_counts,
                  double unigram_power);

  NodeId draw(std::mt19937_64& rng) const;

 private:
  std::vector<NodeId> ids_;
  AliasTable table_;
};

double sigmoid(double x);

// -log sigma(u.v) for a positive pair, -log sigma(-u.v) for a negative one.
double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      bool positive);
void sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                        bool positive, std::span<double> grad_center,
                        std::span<double> grad_context);

EmbeddingTable sgns_train(const WalkCorpus& corpus, const SgnsConfig& config,
                          const std::vector<std::string>& id_to_cui);

}  // namespace kgemb
