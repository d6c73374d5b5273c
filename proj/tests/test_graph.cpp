#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kgemb/graph.hpp"
#include "kgemb/util.hpp"

using namespace kgemb;
using namespace kgemb::test;

TEST_CASE("smallest graph: two nodes, one relation") {
  auto g = make_graph(2, {{0, 1}});
  CHECK(g.num_nodes() == 2);
  CHECK(g.num_undirected_edges() == 1);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
}

TEST_CASE("triangle has all degrees two") {
  auto g = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  for (NodeId i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);
}

TEST_CASE("duplicate edges collapse in the undirected view") {
  auto g = make_graph(3, {{0, 1}, {0, 1}, {1, 0}});
  CHECK(g.num_undirected_edges() == 1);
  CHECK(g.degree(2) == 0);           // isolated node keeps its id
  CHECK(g.edges().size() == 3);      // directed multigraph retained
}

TEST_CASE("duplicate cui rejected") {
  std::vector<GraphNode> nodes(2);
  nodes[0].cui = nodes[1].cui = "C1";
  CHECK_THROWS_AS(ConceptGraph::build(nodes, {}), DuplicateCui);
}

TEST_CASE("handshake lemma on a random graph") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<NodeId> pick(0, 29);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < 80; ++i) {
    NodeId a = pick(rng), b = pick(rng);
    if (a != b) edges.push_back({a, b});
  }
  auto g = make_graph(30, edges);
  std::size_t degree_sum = 0;
  for (NodeId i = 0; i < 30; ++i) degree_sum += g.degree(i);
  CHECK(degree_sum == 2 * g.num_undirected_edges());
}

TEST_CASE("neighbor lists are sorted") {
  auto g = make_graph(5, {{0, 4}, {0, 2}, {0, 1}, {0, 3}});
  auto n = g.neighbors(0);
  CHECK(std::is_sorted(n.begin(), n.end()));
  CHECK(n.size() == 4);
}

TEST_CASE("alias table: uniform and 3:1 weights are exact") {
  std::vector<double> uniform = {1.0, 1.0};
  AliasTable t1{std::span<const double>(uniform)};
  CHECK(t1.induced_probability(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t1.induced_probability(1) == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> skew = {3.0, 1.0};
  AliasTable t2{std::span<const double>(skew)};
  CHECK(t2.induced_probability(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(t2.induced_probability(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("alias table rejects all-zero weights") {
  std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(AliasTable{std::span<const double>(zeros)}, AllZeroWeights);
}

TEST_CASE("alias table induced distribution matches weights to 1e-12 TV") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> weights(1 + trial % 7);
    double total = 0;
    for (auto& x : weights) total += (x = w(rng));
    if (total == 0) weights[0] = total = 1;
    AliasTable t{std::span<const double>(weights)};
    double tv = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      tv += std::abs(t.induced_probability(i) - weights[i] / total);
    CHECK(tv / 2 < 1e-12);
  }
}

TEST_CASE("alias sampling frequency within 3 standard errors over 1e6 draws") {
  std::vector<double> weights = {5.0, 1.0, 3.0, 1.0};
  AliasTable t{std::span<const double>(weights)};
  auto rng = make_rng(99);
  const std::size_t n = 1'000'000;
  std::vector<std::size_t> counts(weights.size(), 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[t.sample(rng)];
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double p = weights[i] / 10.0;
    double se = std::sqrt(p * (1 - p) * double(n));
    CHECK(std::abs(double(counts[i]) - p * n) < 3 * se);
  }
}

TEST_CASE("snapshot round-trips through disk") {
  std::vector<SemanticGroup> groups = {SemanticGroup::DISO, SemanticGroup::CHEM,
                                       SemanticGroup::ANAT};
  std::vector<std::string> types = {"Disease or Syndrome", "Vitamin", "Tissue"};
  auto g = make_graph(3, {{0, 1}, {1, 2}}, groups, types);

  TempDir dir("snapshot");
  g.save_snapshot(dir.file("graph.tsv"));
  auto g2 = ConceptGraph::load_snapshot(dir.file("graph.tsv"));

  CHECK(g2.num_nodes() == 3);
  CHECK(g2.num_undirected_edges() == 2);
  CHECK(g2.node(1).group == SemanticGroup::CHEM);
  CHECK(g2.node(2).semantic_type == "Tissue");
  CHECK(g2.edges().size() == g.edges().size());

  // byte-identical on a second save
  g2.save_snapshot(dir.file("graph2.tsv"));
  CHECK(read_file(dir.file("graph.tsv")) == read_file(dir.file("graph2.tsv")));
}

TEST_CASE("group counts match the node array") {
  std::vector<SemanticGroup> groups = {SemanticGroup::DISO, SemanticGroup::DISO,
                                       SemanticGroup::CHEM};
  auto g = make_graph(3, {}, groups);
  auto counts = g.group_counts();
  CHECK(counts["DISO"] == 2);
  CHECK(counts["CHEM"] == 1);
}
