#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>
#include <sstream>

#include "kgemb/eval.hpp"
#include "kgemb/graph.hpp"
#include "kgemb/patient.hpp"
#include "kgemb/pipeline.hpp"
#include "kgemb/poincare.hpp"
#include "kgemb/rrf.hpp"
#include "kgemb/sgns.hpp"
#include "kgemb/util.hpp"
#include "kgemb/walks.hpp"

namespace py = pybind11;
using namespace kgemb;

namespace {

std::set<SemanticGroup> parse_groups(const std::vector<std::string>& names) {
  if (names.empty())
    return {SemanticGroup::ANAT, SemanticGroup::CHEM, SemanticGroup::DISO, SemanticGroup::PROC};
  std::set<SemanticGroup> out;
  for (const auto& n : names) {
    auto g = semantic_group_from_string(n);
    if (!g) throw std::invalid_argument("unknown semantic group: " + n);
    out.insert(*g);
  }
  return out;
}

ConceptGraph build_graph_from_rrf(const std::string& mrconso_path,
                                  const std::string& mrrel_path,
                                  const std::string& mrsty_path,
                                  const std::vector<std::string>& groups) {
  auto table = SemanticGroupTable::builtin();
  auto concepts = load_concepts(parse_rrf_lines(read_file(mrconso_path), kMrconsoColumns),
                                parse_rrf_lines(read_file(mrsty_path), kMrstyColumns), table,
                                parse_groups(groups));
  std::set<std::string> retained;
  for (const auto& c : concepts.concepts) retained.insert(c.cui);
  auto relations =
      load_relations(parse_rrf_lines(read_file(mrrel_path), kMrrelColumns), retained,
                     concepts.skips);
  return ConceptGraph::from_records(concepts, relations);
}

WalkCorpus corpus_from_walks(const std::vector<std::vector<NodeId>>& walks) {
  WalkCorpus c;
  c.walks = walks;
  for (const auto& w : walks)
    for (NodeId id : w) ++c.vocabulary_counts[id];
  return c;
}

Metapath parse_metapath(const std::vector<std::string>& names) {
  Metapath p;
  for (const auto& n : names) {
    auto g = semantic_group_from_string(n);
    if (!g) throw std::invalid_argument("unknown semantic group: " + n);
    p.push_back(*g);
  }
  return p;
}

}  // namespace

PYBIND11_MODULE(_kgemb, m) {
  m.doc() = "clinical concept graph embeddings: walks, SGNS, hyperbolic training, evaluation";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<StageError>(m, "StageError");

  py::class_<ConceptGraph>(m, "Graph")
      .def_static("load_snapshot", &ConceptGraph::load_snapshot, py::arg("path"))
      .def("save_snapshot", &ConceptGraph::save_snapshot, py::arg("path"))
      .def("num_nodes", &ConceptGraph::num_nodes)
      .def("num_undirected_edges", &ConceptGraph::num_undirected_edges)
      .def("degree", &ConceptGraph::degree, py::arg("node"))
      .def("neighbors",
           [](const ConceptGraph& g, NodeId id) {
             auto span = g.neighbors(id);
             return std::vector<NodeId>(span.begin(), span.end());
           },
           py::arg("node"))
      .def("cui", [](const ConceptGraph& g, NodeId id) { return g.node(id).cui; })
      .def("name", [](const ConceptGraph& g, NodeId id) { return g.node(id).name; })
      .def("semantic_type",
           [](const ConceptGraph& g, NodeId id) { return g.node(id).semantic_type; })
      .def("group",
           [](const ConceptGraph& g, NodeId id) { return to_string(g.node(id).group); })
      .def("cuis",
           [](const ConceptGraph& g) {
             std::vector<std::string> out;
             for (NodeId i = 0; i < g.num_nodes(); ++i) out.push_back(g.node(i).cui);
             return out;
           })
      .def("hierarchical_edges", &ConceptGraph::hierarchical_edges)
      .def("group_counts", &ConceptGraph::group_counts)
      .def("__repr__", [](const ConceptGraph& g) {
        std::ostringstream s;
        s << "Graph(" << g.num_nodes() << " nodes, " << g.num_undirected_edges() << " edges)";
        return s.str();
      });

  m.def("build_graph_from_rrf", &build_graph_from_rrf, py::arg("mrconso"), py::arg("mrrel"),
        py::arg("mrsty"), py::arg("groups") = std::vector<std::string>{},
        "Parse RRF tables into a typed concept graph");

  py::class_<EmbeddingTable>(m, "Embedding")
      .def_static("load_word2vec", &EmbeddingTable::load_word2vec, py::arg("path"))
      .def("save_word2vec", &EmbeddingTable::save_word2vec, py::arg("path"))
      .def_readonly("dim", &EmbeddingTable::dim)
      .def_readonly("cuis", &EmbeddingTable::id_to_cui)
      .def_property_readonly("geometry",
                             [](const EmbeddingTable& t) { return to_string(t.geometry); })
      .def("__len__", &EmbeddingTable::size)
      .def("vector",
           [](const EmbeddingTable& t, std::size_t i) {
             if (i >= t.size()) throw py::index_error();
             auto r = t.row(i);
             return std::vector<double>(r.begin(), r.end());
           },
           py::arg("row"))
      .def("__repr__", [](const EmbeddingTable& t) {
        std::ostringstream s;
        s << "Embedding(" << t.size() << " x " << t.dim << ", " << to_string(t.geometry) << ")";
        return s.str();
      });

  m.def(
      "generate_walks",
      [](const ConceptGraph& graph, const std::string& engine, std::size_t walks_per_node,
         std::size_t walk_length, double p, double q, std::uint64_t seed, std::size_t workers,
         const std::vector<std::string>& metapath) {
        WalkConfig wc;
        wc.walks_per_node = walks_per_node;
        wc.walk_length = walk_length;
        wc.return_param = p;
        wc.inout_param = q;
        wc.seed = seed;
        wc.workers = workers;
        std::optional<Metapath> mp;
        WalkEngineKind kind = WalkEngineKind::Node2vec;
        if (engine == "metapath") {
          kind = WalkEngineKind::Metapath;
          mp = parse_metapath(metapath.empty()
                                  ? std::vector<std::string>{"DISO", "CHEM", "DISO"}
                                  : metapath);
        } else if (engine != "node2vec") {
          throw std::invalid_argument("unknown walk engine: " + engine);
        }
        return generate_corpus(graph, kind, wc, mp).walks;
      },
      py::arg("graph"), py::arg("engine") = "node2vec", py::arg("walks_per_node") = 10,
      py::arg("walk_length") = 20, py::arg("p") = 1.0, py::arg("q") = 1.0, py::arg("seed") = 1,
      py::arg("workers") = 1, py::arg("metapath") = std::vector<std::string>{},
      "Biased or metapath-constrained random walks as lists of dense node ids");

  m.def(
      "train_sgns",
      [](const std::vector<std::vector<NodeId>>& walks, const std::vector<std::string>& cuis,
         std::size_t dimension, std::size_t window, std::size_t negatives, std::size_t epochs,
         double initial_lr, std::uint64_t seed, std::size_t workers) {
        SgnsConfig cfg;
        cfg.dimension = dimension;
        cfg.window = window;
        cfg.negatives_per_positive = negatives;
        cfg.epochs = epochs;
        cfg.initial_lr = initial_lr;
        cfg.seed = seed;
        cfg.workers = workers;
        return sgns_train(corpus_from_walks(walks), cfg, cuis);
      },
      py::arg("walks"), py::arg("cuis"), py::arg("dimension") = 100, py::arg("window") = 5,
      py::arg("negatives") = 5, py::arg("epochs") = 5, py::arg("initial_lr") = 0.025,
      py::arg("seed") = 1, py::arg("workers") = 1,
      "Skip-gram with negative sampling over a walk corpus");

  m.def(
      "train_poincare",
      [](const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
         std::size_t num_nodes, const std::vector<std::string>& cuis, std::size_t dimension,
         std::size_t epochs, double learning_rate, std::size_t burn_in_epochs,
         std::size_t negatives, std::uint64_t seed) {
        PoincareConfig cfg;
        cfg.dimension = dimension;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.burn_in_epochs = burn_in_epochs;
        cfg.negatives_per_positive = negatives;
        cfg.seed = seed;
        return poincare_train(edges, num_nodes, cfg, cuis);
      },
      py::arg("edges"), py::arg("num_nodes"), py::arg("cuis"), py::arg("dimension") = 50,
      py::arg("epochs") = 50, py::arg("learning_rate") = 0.1, py::arg("burn_in_epochs") = 10,
      py::arg("negatives") = 10, py::arg("seed") = 1,
      "Hyperbolic embedding of hierarchical edges in the unit ball");

  m.def("poincare_distance",
        [](const std::vector<double>& u, const std::vector<double>& v) {
          return poincare_distance(u, v);
        },
        py::arg("u"), py::arg("v"));
  m.def("cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return cosine_similarity(a, b);
        },
        py::arg("a"), py::arg("b"));

  m.def(
      "classify_nodes",
      [](const EmbeddingTable& emb, const ConceptGraph& graph, double train_fraction,
         std::uint64_t seed) {
        return classify_nodes(emb, semantic_type_dataset(graph), train_fraction, seed);
      },
      py::arg("embedding"), py::arg("graph"), py::arg("train_fraction") = 0.8,
      py::arg("seed") = 1, "Semantic-type probe accuracy");

  m.def(
      "predict_links",
      [](const EmbeddingTable& emb, const ConceptGraph& graph, double sample_fraction,
         double train_fraction, std::uint64_t seed) {
        auto ds = build_link_dataset(graph, sample_fraction, seed);
        auto res = predict_links(emb, ds, train_fraction, seed);
        return py::make_tuple(res.accuracy, res.threshold);
      },
      py::arg("embedding"), py::arg("graph"), py::arg("sample_fraction") = 0.02,
      py::arg("train_fraction") = 0.8, py::arg("seed") = 1,
      "Link prediction (accuracy, cosine threshold)");

  m.def(
      "benchmark_power",
      [](const EmbeddingTable& emb, const ConceptGraph& graph, std::size_t bootstraps,
         double alpha, std::uint64_t seed, const std::string& similarity) {
        SimilarityKind kind = similarity == "neg_poincare" ? SimilarityKind::NegativePoincare
                                                           : SimilarityKind::Cosine;
        std::map<std::string, double> out;
        for (const auto& s : build_benchmark_sets(graph)) {
          if (s.pairs.empty()) continue;
          out[s.name] = bootstrap_power(emb, s, bootstraps, alpha, seed, kind).power;
        }
        return out;
      },
      py::arg("embedding"), py::arg("graph"), py::arg("bootstraps") = 10000,
      py::arg("alpha") = 0.05, py::arg("seed") = 1, py::arg("similarity") = "cosine",
      "Bootstrap statistical power per benchmark pair set (D1..D5)");

  m.def(
      "run_pipeline",
      [](const std::string& config_path, const std::string& config_text,
         const std::vector<std::string>& stages) {
        auto cfg = config_path.empty() ? PipelineConfig::parse_string(config_text)
                                       : PipelineConfig::parse_file(config_path);
        std::ostringstream log;
        PipelineRunner runner(cfg, log);
        runner.run(stages);
        return py::make_tuple(runner.output_dir(), log.str());
      },
      py::arg("config_path") = "", py::arg("config_text") = "",
      py::arg("stages") = std::vector<std::string>{},
      "Run pipeline stages; returns (output_dir, log)");

  m.attr("PIPELINE_STAGES") = pipeline_stage_order();
}
