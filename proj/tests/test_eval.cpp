#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "kgemb/eval.hpp"
#include "kgemb/util.hpp"

using namespace kgemb;
using namespace kgemb::test;

namespace {

EmbeddingTable table_of(const std::vector<std::vector<double>>& rows) {
  EmbeddingTable t;
  t.dim = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.id_to_cui.push_back("C" + std::to_string(i));
    t.data.insert(t.data.end(), rows[i].begin(), rows[i].end());
  }
  return t;
}

// Gaussian blobs around one-hot-ish centers, labels = blob index.
std::pair<EmbeddingTable, ClassificationDataset> blob_data(std::size_t classes,
                                                           std::size_t per_class,
                                                           std::size_t d, double spread,
                                                           std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> centers(classes, std::vector<double>(d));
  for (auto& c : centers)
    for (auto& x : c) x = g(rng);

  std::vector<std::vector<double>> rows;
  ClassificationDataset ds;
  for (std::size_t c = 0; c < classes; ++c) {
    ds.label_names.push_back("class" + std::to_string(c));
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = centers[c][j] + spread * g(rng);
      ds.items.emplace_back(NodeId(rows.size()), c);
      rows.push_back(row);
    }
  }
  return {table_of(rows), ds};
}

// random orthogonal matrix via Gram-Schmidt on a Gaussian matrix
std::vector<std::vector<double>> random_rotation(std::size_t d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (auto& row : q)
    for (auto& x : row) x = g(rng);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double p = 0;
      for (std::size_t k = 0; k < d; ++k) p += q[i][k] * q[j][k];
      for (std::size_t k = 0; k < d; ++k) q[i][k] -= p * q[j][k];
    }
    double n = norm(q[i]);
    for (auto& x : q[i]) x /= n;
  }
  return q;
}

EmbeddingTable rotate(const EmbeddingTable& t, const std::vector<std::vector<double>>& q) {
  EmbeddingTable out = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto src = t.row(i);
    auto dst = out.row(i);
    for (std::size_t r = 0; r < t.dim; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < t.dim; ++c) s += q[r][c] * src[c];
      dst[r] = s;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("semantic type dataset labels every node") {
  std::vector<std::string> types = {"Disease or Syndrome", "Vitamin", "Disease or Syndrome"};
  std::vector<SemanticGroup> groups = {SemanticGroup::DISO, SemanticGroup::CHEM,
                                       SemanticGroup::DISO};
  auto g = make_graph(3, {{0, 1}}, groups, types);
  auto ds = semantic_type_dataset(g);
  REQUIRE(ds.items.size() == 3);
  CHECK(ds.label_names.size() == 2);
  CHECK(ds.items[0].second == ds.items[2].second);
  CHECK(ds.items[0].second != ds.items[1].second);
}

TEST_CASE("well-separated clusters classify near perfectly") {
  auto [table, ds] = blob_data(3, 80, 6, 0.05, 1);
  double acc = classify_nodes(table, ds, 0.7, 2);
  CHECK(acc >= 0.99);
}

TEST_CASE("uninformative features score at chance over 43 classes") {
  const std::size_t classes = 43, per_class = 240, d = 5;
  auto rng = make_rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  ClassificationDataset ds;
  for (std::size_t c = 0; c < classes; ++c) ds.label_names.push_back(std::to_string(c));
  for (std::size_t i = 0; i < classes * per_class; ++i) {
    std::vector<double> row(d);
    for (auto& x : row) x = g(rng);
    ds.items.emplace_back(NodeId(i), i % classes);
    rows.push_back(row);
  }
  double acc = classify_nodes(table_of(rows), ds, 0.7, 3);
  CHECK(std::abs(acc - 1.0 / 43.0) < 0.02);
}

TEST_CASE("classification accuracy is invariant to a global rotation") {
  auto [table, ds] = blob_data(4, 60, 6, 0.6, 5);
  double base = classify_nodes(table, ds, 0.7, 6);
  auto rotated = rotate(table, random_rotation(6, 7));
  double rot = classify_nodes(rotated, ds, 0.7, 6);
  CHECK(std::abs(base - rot) <= 0.01);
}

TEST_CASE("classification rejects a node without an embedding") {
  auto table = table_of({{1.0, 0.0}});
  ClassificationDataset ds;
  ds.label_names = {"a", "b"};
  ds.items = {{0, 0}, {5, 1}};
  CHECK_THROWS_AS(classify_nodes(table, ds, 0.5, 1), MissingEmbedding);
}

TEST_CASE("complete graph has no room for negative links") {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < 4; ++a)
    for (NodeId b = a + 1; b < 4; ++b) edges.push_back({a, b});
  auto g = make_graph(4, edges);
  CHECK_THROWS_AS(build_link_dataset(g, 1.0, 1), NegativeExhaustion);
}

TEST_CASE("four-cycle cannot supply four negatives") {
  auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  CHECK_THROWS_AS(build_link_dataset(g, 1.0, 1), NegativeExhaustion);
  auto ds = build_link_dataset(g, 0.5, 1);  // two negatives exist, two wanted
  CHECK(ds.positives.size() == 2);
  CHECK(ds.negatives.size() == 2);
}

TEST_CASE("path graph yields disjoint positive and negative sets") {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i + 1 < 10; ++i) edges.push_back({i, NodeId(i + 1)});
  auto g = make_graph(10, edges);
  auto ds = build_link_dataset(g, 1.0, 3);
  CHECK(ds.positives.size() == 9);
  CHECK(ds.negatives.size() == 9);
  std::set<std::pair<NodeId, NodeId>> pos(ds.positives.begin(), ds.positives.end());
  std::set<std::pair<NodeId, NodeId>> neg(ds.negatives.begin(), ds.negatives.end());
  CHECK(pos.size() == 9);
  CHECK(neg.size() == 9);
  for (const auto& p : neg) {
    CHECK(pos.count(p) == 0);
    CHECK_FALSE(g.has_undirected_edge(p.first, p.second));
  }
}

TEST_CASE("link prediction separates a clean cosine gap") {
  // two antipodal clusters: intra pairs are positives, cross pairs negatives
  auto rng = make_rng(12);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < 40; ++i) {
    double sign = i < 20 ? 1.0 : -1.0;
    rows.push_back({sign + g(rng), g(rng), g(rng)});
  }
  LinkDataset ds;
  for (NodeId a = 0; a < 20; a += 2) {
    ds.positives.push_back({a, NodeId(a + 1)});
    ds.positives.push_back({NodeId(20 + a), NodeId(21 + a)});
    ds.negatives.push_back({a, NodeId(39 - a)});
    ds.negatives.push_back({NodeId(a + 1), NodeId(38 - a)});
  }
  auto res = predict_links(table_of(rows), ds, 0.6, 13);
  CHECK(res.accuracy >= 0.95);
  CHECK(res.threshold > -1.0);
  CHECK(res.threshold < 1.0);
}

TEST_CASE("link prediction on a constant feature is near chance") {
  std::vector<std::vector<double>> rows(30, {1.0, 0.0});
  LinkDataset ds;
  for (NodeId i = 0; i + 1 < 30; i += 2) {
    ds.positives.push_back({i, NodeId(i + 1)});
    ds.negatives.push_back({i, NodeId((i + 3) % 30)});
  }
  auto res = predict_links(table_of(rows), ds, 0.5, 14);
  CHECK(res.accuracy >= 0.3);
  CHECK(res.accuracy <= 0.7);
}

namespace {

// explicit fixture with isa flags and mixed groups
ConceptGraph benchmark_fixture() {
  std::vector<GraphNode> nodes(5);
  const char* types[] = {"Disease or Syndrome", "Disease or Syndrome", "Neoplastic Process",
                         "Vitamin", "Pharmacologic Substance"};
  for (std::size_t i = 0; i < 5; ++i) {
    nodes[i].cui = "C" + std::to_string(i);
    nodes[i].name = "N" + std::to_string(i);
    nodes[i].semantic_type = types[i];
    nodes[i].group = i < 3 ? SemanticGroup::DISO : SemanticGroup::CHEM;
  }
  std::vector<GraphEdge> edges = {
      {0, 1, "isa", true},           // D1
      {0, 1, "related_to", false},   // parallel non-isa: stays in D1 only
      {1, 2, "related_to", false},   // D3
      {3, 4, "isa", true},           // D2
      {0, 3, "treats", false},       // D5
      {1, 3, "isa", true},           // cross-group isa still lands in D5
  };
  return ConceptGraph::build(nodes, edges);
}

}  // namespace

TEST_CASE("benchmark sets partition the six-edge fixture") {
  auto sets = build_benchmark_sets(benchmark_fixture());
  using P = std::pair<NodeId, NodeId>;
  CHECK(sets[0].name == "D1");
  CHECK(sets[0].pairs == std::vector<P>{{0, 1}});
  CHECK(sets[1].pairs == std::vector<P>{{3, 4}});
  CHECK(sets[2].pairs == std::vector<P>{{1, 2}});
  CHECK(sets[3].pairs.empty());
  CHECK(sets[4].pairs == std::vector<P>{{0, 3}, {1, 3}});

  // D1 categories cover every node of the participating semantic types
  CHECK(sets[0].category_of.at(0) == "Disease or Syndrome");
  auto members = sets[0].category_members.at("Disease or Syndrome");
  CHECK(members == std::vector<NodeId>{0, 1});
  // D5 mixes groups
  CHECK(sets[4].category_members.at("Vitamin") == std::vector<NodeId>{3});
}

TEST_CASE("bootstrap power is calibrated at alpha for null-like pairs") {
  // true pairs drawn from the same categories as the resampled null
  const std::size_t n_nodes = 60, d = 8, n_pairs = 1000;
  auto rng = make_rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::vector<double> row(d);
    for (auto& x : row) x = g(rng);
    rows.push_back(row);
  }
  BenchmarkPairSet set;
  set.name = "D1";
  for (NodeId i = 0; i < n_nodes; ++i) {
    set.category_of[i] = "T";
    set.category_members["T"].push_back(i);
  }
  std::uniform_int_distribution<NodeId> pick(0, n_nodes - 1);
  while (set.pairs.size() < n_pairs) {
    NodeId a = pick(rng), b = pick(rng);
    if (a != b) set.pairs.push_back({a, b});
  }
  auto report = bootstrap_power(table_of(rows), set, 10'000, 0.05, 32);
  CHECK(std::abs(report.power - 0.05) < 0.02);
  CHECK(report.null_quantiles.size() == 7);
  CHECK(std::is_sorted(report.null_quantiles.begin(), report.null_quantiles.end()));
  CHECK(report.null_samples.size() == 10'000);
}

TEST_CASE("bootstrap power saturates for self-similar pairs") {
  const std::size_t n_nodes = 40, d = 6;
  auto rng = make_rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::vector<double> row(d);
    for (auto& x : row) x = g(rng);
    rows.push_back(row);
  }
  BenchmarkPairSet set;
  set.name = "D2";
  for (NodeId i = 0; i < n_nodes; ++i) {
    set.category_of[i] = "T";
    set.category_members["T"].push_back(i);
  }
  for (NodeId i = 0; i < n_nodes; ++i) set.pairs.push_back({i, i});  // cosine 1 each
  auto report = bootstrap_power(table_of(rows), set, 5000, 0.05, 42);
  CHECK(report.power == 1.0);
}

TEST_CASE("bootstrap power decays as true pairs blur into the null") {
  const std::size_t n_nodes = 80, d = 10;
  auto rng = make_rng(51);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> prev_power;
  for (double noise : {0.2, 1.0, 5.0}) {
    std::vector<std::vector<double>> rows;
    BenchmarkPairSet set;
    set.name = "D3";
    // node 2i and 2i+1 form a true pair; 2i+1 = 2i + noise
    for (std::size_t i = 0; i < n_nodes / 2; ++i) {
      std::vector<double> a(d), b(d);
      for (std::size_t j = 0; j < d; ++j) {
        a[j] = g(rng);
        b[j] = a[j] + noise * g(rng);
      }
      rows.push_back(a);
      rows.push_back(b);
      set.pairs.push_back({NodeId(2 * i), NodeId(2 * i + 1)});
    }
    for (NodeId i = 0; i < n_nodes; ++i) {
      set.category_of[i] = "T";
      set.category_members["T"].push_back(i);
    }
    auto report = bootstrap_power(table_of(rows), set, 4000, 0.05, 52);
    prev_power.push_back(report.power);
  }
  CHECK(prev_power[0] > prev_power[2]);
  CHECK(prev_power[0] > 0.9);
}

TEST_CASE("bootstrap rejects an empty category") {
  auto table = table_of({{1.0, 0.0}, {0.0, 1.0}});
  BenchmarkPairSet set;
  set.name = "D4";
  set.pairs = {{0, 1}};
  set.category_of[0] = "A";
  set.category_of[1] = "B";
  set.category_members["A"] = {0};  // B missing entirely
  CHECK_THROWS_AS(bootstrap_power(table, set, 100, 0.05, 1), EmptyCategory);
}

TEST_CASE("negative hyperbolic similarity ranks a coincident pair above the null") {
  // node 1 coincides with node 0; the other 40 candidates sit far away, so the
  // 95% null cutoff comes from the far cloud and the true pair clears it
  std::vector<std::vector<double>> rows = {{0.1, 0.0}, {0.1, 0.0}};
  auto rng = make_rng(61);
  std::uniform_real_distribution<double> far(0.5, 0.8);
  for (int i = 0; i < 40; ++i) rows.push_back({-far(rng), far(rng) - 0.65});
  auto table = table_of(rows);
  table.geometry = Geometry::Hyperbolic;

  BenchmarkPairSet set;
  set.name = "D5";
  set.pairs = {{0, 1}};
  set.category_of[0] = "A";
  set.category_of[1] = "B";
  set.category_members["A"] = {0};
  for (NodeId i = 1; i < NodeId(rows.size()); ++i) set.category_members["B"].push_back(i);
  auto report =
      bootstrap_power(table, set, 2000, 0.05, 62, SimilarityKind::NegativePoincare);
  CHECK(report.power == 1.0);
}
