#include "kgemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kgemb/poincare.hpp"
#include "kgemb/util.hpp"

namespace kgemb {

namespace {

void require_embedding(const EmbeddingTable& t, NodeId id, const ConceptGraph* g = nullptr) {
  if (std::size_t(id) >= t.size())
    throw MissingEmbedding(g ? g->node(id).cui : std::to_string(id));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

ClassificationDataset semantic_type_dataset(const ConceptGraph& graph) {
  ClassificationDataset ds;
  std::map<std::string, std::size_t> label_ids;
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    const auto& type = graph.node(i).semantic_type;
    auto [it, inserted] = label_ids.emplace(type, ds.label_names.size());
    if (inserted) ds.label_names.push_back(type);
    ds.items.emplace_back(i, it->second);
  }
  return ds;
}

double classify_nodes(const EmbeddingTable& embeddings, const ClassificationDataset& dataset,
                      double train_fraction, std::uint64_t seed) {
  for (const auto& [id, _] : dataset.items) require_embedding(embeddings, id);
  const std::size_t n = dataset.items.size();
  const std::size_t d = embeddings.dim;
  const std::size_t num_labels = dataset.label_names.size();
  if (n < 2 || num_labels < 2) return 1.0;

  auto idx = shuffled_indices(n, seed);
  std::size_t n_train = std::max<std::size_t>(1, std::size_t(train_fraction * n));
  n_train = std::min(n_train, n - 1);

  // global (rotation-invariant) feature scale
  double mean_norm = 0;
  for (const auto& [id, _] : dataset.items) mean_norm += norm(embeddings.row(id));
  mean_norm = std::max(1e-12, mean_norm / double(n));
  const double fscale = 1.0 / mean_norm;

  // multinomial logistic regression, zero init, full-batch gradient descent
  std::vector<double> w(num_labels * d, 0.0), b(num_labels, 0.0);
  std::vector<double> logits(num_labels), probs(num_labels);
  std::vector<double> gw(num_labels * d), gb(num_labels);
  const std::size_t iters = 300;
  const double lr = 2.0;
  const double l2 = 1e-4;

  auto forward = [&](NodeId id) {
    auto x = embeddings.row(id);
    for (std::size_t c = 0; c < num_labels; ++c) {
      double s = b[c];
      const double* wc = w.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) s += wc[j] * x[j] * fscale;
      logits[c] = s;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (std::size_t c = 0; c < num_labels; ++c) z += (probs[c] = std::exp(logits[c] - mx));
    for (double& p : probs) p /= z;
  };

  for (std::size_t it = 0; it < iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t k = 0; k < n_train; ++k) {
      const auto& [id, label] = dataset.items[idx[k]];
      forward(id);
      auto x = embeddings.row(id);
      for (std::size_t c = 0; c < num_labels; ++c) {
        double g = probs[c] - (c == label ? 1.0 : 0.0);
        gb[c] += g;
        double* gwc = gw.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) gwc[j] += g * x[j] * fscale;
      }
    }
    const double scale = lr / double(n_train);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * gw[i] + lr * l2 * w[i];
    for (std::size_t c = 0; c < num_labels; ++c) b[c] -= scale * gb[c];
  }

  std::size_t correct = 0;
  for (std::size_t k = n_train; k < n; ++k) {
    const auto& [id, label] = dataset.items[idx[k]];
    forward(id);
    std::size_t pred = std::max_element(probs.begin(), probs.end()) - probs.begin();
    if (pred == label) ++correct;
  }
  return double(correct) / double(n - n_train);
}

LinkDataset build_link_dataset(const ConceptGraph& graph, double sample_fraction,
                               std::uint64_t seed) {
  if (graph.num_undirected_edges() == 0)
    throw std::invalid_argument("graph has no edges");

  std::vector<std::pair<NodeId, NodeId>> all_edges;
  for (NodeId u = 0; u < graph.num_nodes(); ++u)
    for (NodeId v : graph.neighbors(u))
      if (u < v) all_edges.emplace_back(u, v);

  auto rng = make_rng(seed);
  std::shuffle(all_edges.begin(), all_edges.end(), rng);
  std::size_t want = std::max<std::size_t>(1, std::size_t(sample_fraction * all_edges.size()));
  want = std::min(want, all_edges.size());

  LinkDataset ds;
  ds.positives.assign(all_edges.begin(), all_edges.begin() + want);

  std::uniform_int_distribution<NodeId> pick(0, NodeId(graph.num_nodes() - 1));
  std::set<std::pair<NodeId, NodeId>> used;
  const std::size_t max_attempts = 100 * want;
  std::size_t attempts = 0;
  while (ds.negatives.size() < want) {
    if (attempts++ >= max_attempts) throw NegativeExhaustion();
    NodeId u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (graph.has_undirected_edge(u, v)) continue;
    if (!used.insert({u, v}).second) continue;
    ds.negatives.emplace_back(u, v);
  }
  return ds;
}

LinkPredictionResult predict_links(const EmbeddingTable& embeddings, const LinkDataset& dataset,
                                   double train_fraction, std::uint64_t seed) {
  struct Item { double feature; int label; };
  std::vector<Item> items;
  items.reserve(dataset.positives.size() + dataset.negatives.size());
  for (const auto& [u, v] : dataset.positives) {
    require_embedding(embeddings, u);
    require_embedding(embeddings, v);
    items.push_back({cosine_similarity(embeddings.row(u), embeddings.row(v)), 1});
  }
  for (const auto& [u, v] : dataset.negatives) {
    require_embedding(embeddings, u);
    require_embedding(embeddings, v);
    items.push_back({cosine_similarity(embeddings.row(u), embeddings.row(v)), -1});
  }

  auto idx = shuffled_indices(items.size(), seed);
  std::size_t n_train = std::max<std::size_t>(1, std::size_t(train_fraction * items.size()));
  n_train = std::min(n_train, items.size() - 1);

  // hinge loss on w*x + b, subgradient descent
  double w = 0, b = 0;
  const double l2 = 1e-4;
  for (std::size_t epoch = 0; epoch < 200; ++epoch) {
    double lr = 0.5 / (1.0 + 0.05 * double(epoch));
    for (std::size_t k = 0; k < n_train; ++k) {
      const Item& it = items[idx[k]];
      double margin = it.label * (w * it.feature + b);
      double gw = l2 * w, gb = 0;
      if (margin < 1) {
        gw -= it.label * it.feature;
        gb -= it.label;
      }
      w -= lr * gw;
      b -= lr * gb;
    }
  }

  std::size_t correct = 0;
  for (std::size_t k = n_train; k < items.size(); ++k) {
    const Item& it = items[idx[k]];
    int pred = (w * it.feature + b) >= 0 ? 1 : -1;
    if (pred == it.label) ++correct;
  }
  LinkPredictionResult res;
  res.accuracy = double(correct) / double(items.size() - n_train);
  res.threshold = (w != 0) ? -b / w : 0.0;
  return res;
}

std::array<BenchmarkPairSet, 5> build_benchmark_sets(const ConceptGraph& graph) {
  std::array<BenchmarkPairSet, 5> sets;
  for (std::size_t i = 0; i < 5; ++i) sets[i].name = "D" + std::to_string(i + 1);

  auto group_of = [&](NodeId id) { return graph.node(id).group; };

  // unordered within-group pairs with an isa / non-isa flag
  std::map<std::pair<NodeId, NodeId>, bool> diso_pairs, chem_pairs;
  std::set<std::pair<NodeId, NodeId>> cross_pairs;
  for (const auto& e : graph.edges()) {
    NodeId a = std::min(e.head, e.tail), b = std::max(e.head, e.tail);
    SemanticGroup ga = group_of(a), gb = group_of(b);
    if (ga == SemanticGroup::DISO && gb == SemanticGroup::DISO)
      diso_pairs[{a, b}] = diso_pairs[{a, b}] || e.is_hierarchical;
    else if (ga == SemanticGroup::CHEM && gb == SemanticGroup::CHEM)
      chem_pairs[{a, b}] = chem_pairs[{a, b}] || e.is_hierarchical;
    if ((ga == SemanticGroup::DISO && gb == SemanticGroup::CHEM) ||
        (ga == SemanticGroup::CHEM && gb == SemanticGroup::DISO))
      cross_pairs.insert({a, b});
  }
  for (const auto& [pair, isa] : diso_pairs) sets[isa ? 0 : 2].pairs.push_back(pair);
  for (const auto& [pair, isa] : chem_pairs) sets[isa ? 1 : 3].pairs.push_back(pair);
  sets[4].pairs.assign(cross_pairs.begin(), cross_pairs.end());

  for (auto& s : sets) {
    std::set<std::string> needed_types;
    for (const auto& [a, b] : s.pairs) {
      s.category_of[a] = graph.node(a).semantic_type;
      s.category_of[b] = graph.node(b).semantic_type;
      needed_types.insert(graph.node(a).semantic_type);
      needed_types.insert(graph.node(b).semantic_type);
    }
    for (NodeId i = 0; i < graph.num_nodes(); ++i) {
      const auto& type = graph.node(i).semantic_type;
      if (needed_types.count(type)) s.category_members[type].push_back(i);
    }
  }
  return sets;
}

PowerReport bootstrap_power(const EmbeddingTable& embeddings, const BenchmarkPairSet& pair_set,
                            std::size_t bootstrap_count, double alpha, std::uint64_t seed,
                            SimilarityKind similarity) {
  PowerReport report;
  report.dataset = pair_set.name;
  report.bootstrap_count = bootstrap_count;
  if (pair_set.pairs.empty()) return report;

  auto sim = [&](NodeId a, NodeId b) {
    require_embedding(embeddings, a);
    require_embedding(embeddings, b);
    if (similarity == SimilarityKind::NegativePoincare)
      return -poincare_distance(embeddings.row(a), embeddings.row(b));
    return cosine_similarity(embeddings.row(a), embeddings.row(b));
  };

  auto rng = make_rng(seed);
  auto draw_from = [&](const std::string& category) {
    auto it = pair_set.category_members.find(category);
    if (it == pair_set.category_members.end() || it->second.empty())
      throw EmptyCategory(category);
    const auto& members = it->second;
    return members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
  };

  report.null_samples.reserve(bootstrap_count);
  for (std::size_t b = 0; b < bootstrap_count; ++b) {
    const auto& [x, y] = pair_set.pairs[b % pair_set.pairs.size()];
    NodeId xs = draw_from(pair_set.category_of.at(x));
    NodeId ys = draw_from(pair_set.category_of.at(y));
    report.null_samples.push_back(sim(xs, ys));
  }

  std::vector<double> sorted = report.null_samples;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    std::size_t i = std::min(sorted.size() - 1, std::size_t(q * double(sorted.size())));
    return sorted[i];
  };
  for (double q : {0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99})
    report.null_quantiles.push_back(quantile(q));

  const double cutoff = quantile(1.0 - alpha);
  std::size_t above = 0;
  for (const auto& [x, y] : pair_set.pairs)
    if (sim(x, y) > cutoff) ++above;
  report.power = double(above) / double(pair_set.pairs.size());
  return report;
}

}  // namespace kgemb
