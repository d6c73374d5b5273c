#include "kgemb/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "kgemb/util.hpp"

namespace kgemb {

NegativeSampler::NegativeSampler(const std::unordered_map<NodeId, std::size_t>& counts,
                                 double unigram_power)
    : table_([&] {
        if (counts.empty()) throw EmptyCorpus();
        ids_.reserve(counts.size());
        for (const auto& [id, _] : counts) ids_.push_back(id);
        std::sort(ids_.begin(), ids_.end());
        std::vector<double> weights(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i)
          weights[i] = std::pow(double(counts.at(ids_[i])), unigram_power);
        return AliasTable(weights);
      }()) {}

NodeId NegativeSampler::draw(std::mt19937_64& rng) const { return ids_[table_.sample(rng)]; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      bool positive) {
  double s = dot(center, context);
  if (!positive) s = -s;
  // -log sigma(s), numerically stable
  return s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
}

void sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                        bool positive, std::span<double> grad_center,
                        std::span<double> grad_context) {
  double g = sigmoid(dot(center, context)) - (positive ? 1.0 : 0.0);
  for (std::size_t i = 0; i < center.size(); ++i) {
    grad_center[i] = g * context[i];
    grad_context[i] = g * center[i];
  }
}

namespace {

struct Matrices {
  std::vector<double> center;   // the published table
  std::vector<double> context;
  std::size_t dim;

  double* crow(NodeId i) { return center.data() + std::size_t(i) * dim; }
  double* xrow(NodeId i) { return context.data() + std::size_t(i) * dim; }
};

// One positive update plus k negative updates, word2vec style: the center row
// moves once by the accumulated gradient.
void train_pair(Matrices& m, NodeId center, NodeId context, const NegativeSampler& sampler,
                std::size_t negatives, double lr, std::mt19937_64& rng,
                std::vector<double>& center_accum) {
  const std::size_t d = m.dim;
  double* cu = m.crow(center);
  std::fill(center_accum.begin(), center_accum.end(), 0.0);

  auto update_one = [&](NodeId target, bool positive) {
    double* cv = m.xrow(target);
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) s += cu[i] * cv[i];
    double g = (sigmoid(s) - (positive ? 1.0 : 0.0)) * lr;
    for (std::size_t i = 0; i < d; ++i) {
      center_accum[i] += g * cv[i];
      cv[i] -= g * cu[i];
    }
  };

  update_one(context, true);
  for (std::size_t k = 0; k < negatives; ++k) {
    NodeId neg = sampler.draw(rng);
    if (neg == context) continue;
    update_one(neg, false);
  }
  for (std::size_t i = 0; i < d; ++i) cu[i] -= center_accum[i];
}

}  // namespace

EmbeddingTable sgns_train(const WalkCorpus& corpus, const SgnsConfig& config,
                          const std::vector<std::string>& id_to_cui) {
  if (corpus.walks.empty()) throw EmptyCorpus();
  const std::size_t vocab = id_to_cui.size();
  const std::size_t d = config.dimension;

  Matrices m;
  m.dim = d;
  m.center.resize(vocab * d);
  m.context.assign(vocab * d, 0.0);
  {
    auto rng = make_rng(config.seed);
    std::uniform_real_distribution<double> init(-0.5 / double(d), 0.5 / double(d));
    for (double& v : m.center) v = init(rng);
  }

  NegativeSampler sampler(corpus.vocabulary_counts, config.unigram_power);

  // linear decay from initial_lr to initial_lr/100 over all (center, context) pairs
  std::size_t pairs_per_epoch = 0;
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      std::size_t lo = i > config.window ? i - config.window : 0;
      std::size_t hi = std::min(walk.size(), i + config.window + 1);
      pairs_per_epoch += (hi - lo) - 1;
    }
  }
  const double total_pairs = double(std::max<std::size_t>(1, pairs_per_epoch * config.epochs));
  const double lr_floor = config.initial_lr / 100.0;
  std::atomic<std::size_t> pairs_done{0};

  const std::size_t workers = std::max<std::size_t>(1, config.workers);
  auto run_shard = [&](std::size_t wid) {
    auto rng = make_rng(config.seed ^ (wid + 0x51f0));
    std::vector<double> accum(d);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t wi = wid; wi < corpus.walks.size(); wi += workers) {
        const auto& walk = corpus.walks[wi];
        for (std::size_t i = 0; i < walk.size(); ++i) {
          std::size_t lo = i > config.window ? i - config.window : 0;
          std::size_t hi = std::min(walk.size(), i + config.window + 1);
          for (std::size_t j = lo; j < hi; ++j) {
            if (j == i) continue;
            std::size_t done = pairs_done.fetch_add(1, std::memory_order_relaxed);
            double frac = double(done) / total_pairs;
            double lr = std::max(lr_floor, config.initial_lr * (1.0 - frac));
            train_pair(m, walk[i], walk[j], sampler, config.negatives_per_positive, lr, rng,
                       accum);
          }
        }
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

  EmbeddingTable table;
  table.dim = d;
  table.geometry = Geometry::Euclidean;
  table.id_to_cui = id_to_cui;
  table.data = std::move(m.center);
  return table;
}

}  // namespace kgemb
