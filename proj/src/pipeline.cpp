#include "kgemb/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kgemb/eval.hpp"
#include "kgemb/graph.hpp"
#include "kgemb/patient.hpp"
#include "kgemb/poincare.hpp"
#include "kgemb/rrf.hpp"
#include "kgemb/sgns.hpp"
#include "kgemb/util.hpp"
#include "kgemb/walks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kgemb {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

PipelineConfig PipelineConfig::parse_file(const std::string& path) {
  return parse_string(read_file(path));
}

PipelineConfig PipelineConfig::parse_string(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line, section = "global";
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    cfg.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

bool PipelineConfig::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string PipelineConfig::get(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::int64_t PipelineConfig::get_int(const std::string& section, const std::string& key,
                                     std::int64_t fallback) const {
  auto v = get(section, key);
  if (v.empty()) return fallback;
  try { return std::stoll(v); }
  catch (...) { throw ConfigError("not an integer: [" + section + "] " + key + " = " + v); }
}

double PipelineConfig::get_real(const std::string& section, const std::string& key,
                                double fallback) const {
  auto v = get(section, key);
  if (v.empty()) return fallback;
  try { return std::stod(v); }
  catch (...) { throw ConfigError("not a number: [" + section + "] " + key + " = " + v); }
}

std::vector<std::string> PipelineConfig::get_list(const std::string& section,
                                                  const std::string& key) const {
  std::vector<std::string> out;
  for (auto& item : split(get(section, key), ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

void PipelineConfig::set(const std::string& section, const std::string& key,
                         const std::string& value) {
  sections_[section][key] = value;
}

const std::vector<std::string>& pipeline_stage_order() {
  static const std::vector<std::string> order = {
      "ingest",     "walk",       "train-sgns",      "train-poincare", "eval-classify",
      "eval-links", "eval-similarity", "eval-patient", "report"};
  return order;
}

PipelineRunner::PipelineRunner(PipelineConfig config, std::ostream& log)
    : config_(std::move(config)), log_(log) {
  out_dir_ = config_.get("global", "output_dir", "out");
  seed_ = std::uint64_t(config_.get_int("global", "seed", 42));
  workers_ = std::size_t(config_.get_int("global", "workers", 1));
}

std::string PipelineRunner::path_of(const std::string& name) const {
  return (fs::path(out_dir_) / name).string();
}

void PipelineRunner::register_artifact(const std::string& stage, const std::string& name) {
  artifacts_.push_back({name, stage, ""});
  current_stage_files_.push_back(path_of(name));
}

std::vector<std::string> PipelineRunner::embedding_files(const std::string& section) const {
  std::vector<std::string> files;
  if (config_.has(section, "embeddings")) {
    for (auto& f : config_.get_list(section, "embeddings")) files.push_back(path_of(f));
  } else if (config_.has("eval", "embeddings")) {
    for (auto& f : config_.get_list("eval", "embeddings")) files.push_back(path_of(f));
  } else if (fs::exists(out_dir_)) {
    for (auto& e : fs::directory_iterator(out_dir_)) {
      auto name = e.path().filename().string();
      if (name.rfind("emb_", 0) == 0 && name.size() > 4 &&
          name.substr(name.size() - 4) == ".txt")
        files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
  }
  return files;
}

void PipelineRunner::validate(const std::vector<std::string>& stages) const {
  std::set<std::string> will_exist;
  if (fs::exists(out_dir_))
    for (auto& e : fs::directory_iterator(out_dir_))
      will_exist.insert(e.path().filename().string());

  auto requires_file = [&](const std::string& stage, const std::string& artifact) {
    if (!will_exist.count(artifact))
      throw ConfigError("stage " + stage + " requires missing artifact: " + artifact);
  };

  bool have_embeddings =
      std::any_of(will_exist.begin(), will_exist.end(),
                  [](const std::string& n) { return n.rfind("emb_", 0) == 0; });

  for (const auto& stage : stages) {
    if (stage == "ingest") {
      for (const char* key : {"mrconso", "mrrel", "mrsty"}) {
        auto path = config_.get("ingest", key);
        if (path.empty()) throw ConfigError("ingest requires [ingest] " + std::string(key));
        if (!fs::exists(path)) throw ConfigError("input file does not exist: " + path);
      }
      will_exist.insert("graph.tsv");
    } else if (stage == "walk") {
      requires_file(stage, "graph.tsv");
      will_exist.insert("corpus.txt");
    } else if (stage == "train-sgns") {
      requires_file(stage, "graph.tsv");
      requires_file(stage, "corpus.txt");
      have_embeddings = true;
      will_exist.insert("emb_sgns");  // placeholder marker
    } else if (stage == "train-poincare") {
      requires_file(stage, "graph.tsv");
      have_embeddings = true;
    } else if (stage.rfind("eval-", 0) == 0) {
      if (stage != "eval-patient" || config_.get("patient", "cohort").empty())
        requires_file(stage, "graph.tsv");
      if (!have_embeddings)
        throw ConfigError("stage " + stage + " requires missing artifact: embeddings (emb_*.txt)");
    } else if (stage == "report") {
      // consumes whatever reports exist
    } else {
      throw ConfigError("unknown stage: " + stage);
    }
  }
}

void PipelineRunner::run(std::vector<std::string> stages) {
  if (stages.empty()) stages = config_.get_list("global", "stages");
  if (stages.empty()) stages = pipeline_stage_order();

  // dependency order regardless of request order
  const auto& order = pipeline_stage_order();
  std::stable_sort(stages.begin(), stages.end(), [&](const auto& a, const auto& b) {
    return std::find(order.begin(), order.end(), a) < std::find(order.begin(), order.end(), b);
  });

  validate(stages);
  fs::create_directories(out_dir_);

  for (const auto& stage : stages) {
    log_ << "[kgemb] stage " << stage << "\n";
    current_stage_files_.clear();
    try {
      run_stage(stage);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      for (const auto& f : current_stage_files_) {
        if (fs::exists(f)) fs::rename(f, f + ".partial");
        if (fs::exists(f + ".meta.json")) fs::rename(f + ".meta.json", f + ".meta.json.partial");
      }
      throw StageError(stage, ex.what());
    }
  }
  write_manifest();
}

void PipelineRunner::run_stage(const std::string& stage) {
  if (stage == "ingest") stage_ingest();
  else if (stage == "walk") stage_walk();
  else if (stage == "train-sgns") stage_train_sgns();
  else if (stage == "train-poincare") stage_train_poincare();
  else if (stage == "eval-classify") stage_eval_classify();
  else if (stage == "eval-links") stage_eval_links();
  else if (stage == "eval-similarity") stage_eval_similarity();
  else if (stage == "eval-patient") stage_eval_patient();
  else if (stage == "report") stage_report();
}

void PipelineRunner::stage_ingest() {
  auto groups_cfg = config_.get_list("ingest", "groups");
  std::set<SemanticGroup> allowed;
  if (groups_cfg.empty()) {
    allowed = {SemanticGroup::ANAT, SemanticGroup::CHEM, SemanticGroup::DISO,
               SemanticGroup::PROC};
  } else {
    for (auto& g : groups_cfg) {
      auto parsed = semantic_group_from_string(g);
      if (!parsed) throw ConfigError("unknown semantic group: " + g);
      allowed.insert(*parsed);
    }
  }
  auto table_path = config_.get("ingest", "semantic_groups_tsv");
  auto table = table_path.empty() ? SemanticGroupTable::builtin()
                                  : SemanticGroupTable::from_tsv(table_path);

  auto mrconso = parse_rrf_lines(read_file(config_.get("ingest", "mrconso")), kMrconsoColumns);
  auto mrsty = parse_rrf_lines(read_file(config_.get("ingest", "mrsty")), kMrstyColumns);
  auto mrrel = parse_rrf_lines(read_file(config_.get("ingest", "mrrel")), kMrrelColumns);

  auto concepts = load_concepts(mrconso, mrsty, table, allowed);
  std::set<std::string> retained;
  for (const auto& c : concepts.concepts) retained.insert(c.cui);
  auto relations = load_relations(mrrel, retained, concepts.skips);

  auto graph = ConceptGraph::from_records(concepts, relations);
  register_artifact("ingest", "graph.tsv");
  graph.save_snapshot(path_of("graph.tsv"));

  json skip;
  skip["dropped_concepts"] = concepts.skips.dropped_concepts;
  skip["dropped_relations"] = concepts.skips.dropped_relations;
  skip["duplicate_relations"] = concepts.skips.duplicate_relations;
  register_artifact("ingest", "skip_report.json");
  write_file(path_of("skip_report.json"), skip.dump(2) + "\n");
  log_ << "[kgemb]   " << graph.num_nodes() << " nodes, " << graph.num_undirected_edges()
       << " undirected edges\n";
}

void PipelineRunner::stage_walk() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  WalkConfig wc;
  wc.walks_per_node = std::size_t(config_.get_int("walk", "walks_per_node", 10));
  wc.walk_length = std::size_t(config_.get_int("walk", "walk_length", 20));
  wc.return_param = config_.get_real("walk", "p", 1.0);
  wc.inout_param = config_.get_real("walk", "q", 1.0);
  wc.seed = std::uint64_t(config_.get_int("walk", "seed", std::int64_t(seed_)));
  wc.workers = workers_;

  auto engine_name = config_.get("walk", "engine", "node2vec");
  WalkEngineKind engine;
  std::optional<Metapath> metapath;
  if (engine_name == "node2vec") {
    engine = WalkEngineKind::Node2vec;
  } else if (engine_name == "metapath") {
    engine = WalkEngineKind::Metapath;
    Metapath pattern;
    auto pattern_cfg = config_.get_list("walk", "metapath");
    if (pattern_cfg.empty()) pattern_cfg = {"DISO", "CHEM", "DISO"};
    for (auto& g : pattern_cfg) {
      auto parsed = semantic_group_from_string(g);
      if (!parsed) throw ConfigError("bad metapath group: " + g);
      pattern.push_back(*parsed);
    }
    metapath = pattern;
    if (!config_.has("walk", "walks_per_node")) wc.walks_per_node = 20;
    if (!config_.has("walk", "walk_length")) wc.walk_length = 5;
  } else {
    throw ConfigError("unknown walk engine: " + engine_name);
  }

  auto corpus = generate_corpus(graph, engine, wc, metapath);
  json meta;
  meta["engine"] = engine_name;
  meta["walks_per_node"] = wc.walks_per_node;
  meta["walk_length"] = wc.walk_length;
  meta["p"] = wc.return_param;
  meta["q"] = wc.inout_param;
  meta["seed"] = wc.seed;
  meta["workers"] = wc.workers;
  register_artifact("walk", "corpus.txt");
  corpus.save(path_of("corpus.txt"), meta.dump(2));
  log_ << "[kgemb]   " << corpus.walks.size() << " walks, " << corpus.total_tokens()
       << " tokens\n";
}

void PipelineRunner::stage_train_sgns() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  auto corpus = WalkCorpus::load(path_of("corpus.txt"));
  std::vector<std::string> id_to_cui;
  for (NodeId i = 0; i < graph.num_nodes(); ++i) id_to_cui.push_back(graph.node(i).cui);

  std::string method = "node2vec";
  {
    std::ifstream meta(path_of("corpus.txt") + ".meta.json");
    if (meta) {
      auto j = json::parse(meta, nullptr, false);
      if (!j.is_discarded() && j.value("engine", "") == "metapath") method = "metapath2vec";
    }
  }

  auto dims = config_.get_list("sgns", "dimensions");
  if (dims.empty()) dims = {config_.get("sgns", "dimension", "100")};
  for (const auto& dim_str : dims) {
    SgnsConfig sc;
    sc.dimension = std::size_t(std::stoll(dim_str));
    sc.window = std::size_t(config_.get_int("sgns", "window", 5));
    sc.negatives_per_positive = std::size_t(config_.get_int("sgns", "negatives", 5));
    sc.epochs = std::size_t(config_.get_int("sgns", "epochs", 5));
    sc.initial_lr = config_.get_real("sgns", "initial_lr", 0.025);
    sc.unigram_power = config_.get_real("sgns", "unigram_power", 0.75);
    sc.seed = std::uint64_t(config_.get_int("sgns", "seed", std::int64_t(seed_)));
    sc.workers = workers_;
    auto table = sgns_train(corpus, sc, id_to_cui);
    std::string name = "emb_" + method + "_d" + dim_str + ".txt";
    register_artifact("train-sgns", name);
    table.save_word2vec(path_of(name));
    log_ << "[kgemb]   wrote " << name << "\n";
  }
}

void PipelineRunner::stage_train_poincare() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  std::vector<std::string> id_to_cui;
  for (NodeId i = 0; i < graph.num_nodes(); ++i) id_to_cui.push_back(graph.node(i).cui);
  auto edges = graph.hierarchical_edges();

  auto dims = config_.get_list("poincare", "dimensions");
  if (dims.empty()) dims = {config_.get("poincare", "dimension", "50")};
  for (const auto& dim_str : dims) {
    PoincareConfig pc;
    pc.dimension = std::size_t(std::stoll(dim_str));
    pc.epochs = std::size_t(config_.get_int("poincare", "epochs", 50));
    pc.learning_rate = config_.get_real("poincare", "learning_rate", 0.1);
    pc.burn_in_epochs = std::size_t(config_.get_int("poincare", "burn_in_epochs", 10));
    pc.burn_in_lr_divisor = config_.get_real("poincare", "burn_in_lr_divisor", 10.0);
    pc.negatives_per_positive = std::size_t(config_.get_int("poincare", "negatives", 10));
    pc.l2_coefficient = config_.get_real("poincare", "l2", 1e-5);
    pc.ball_epsilon = config_.get_real("poincare", "ball_epsilon", 1e-5);
    pc.seed = std::uint64_t(config_.get_int("poincare", "seed", std::int64_t(seed_)));
    auto table = poincare_train(edges, graph.num_nodes(), pc, id_to_cui);
    std::string name = "emb_poincare_d" + dim_str + ".txt";
    register_artifact("train-poincare", name);
    table.save_word2vec(path_of(name));
    log_ << "[kgemb]   wrote " << name << "\n";
  }
}

namespace {

void parse_emb_name(const std::string& path, std::string& method, std::string& dim) {
  method = "unknown";
  dim = "0";
  auto name = fs::path(path).filename().string();
  if (name.rfind("emb_", 0) == 0) {
    auto rest = name.substr(4, name.size() - 8);  // strip emb_ and .txt
    auto us = rest.rfind("_d");
    if (us != std::string::npos) {
      method = rest.substr(0, us);
      dim = rest.substr(us + 2);
    }
  }
}

}  // namespace

void PipelineRunner::stage_eval_classify() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  auto dataset = semantic_type_dataset(graph);
  double frac = config_.get_real("eval", "train_fraction", 0.8);
  for (const auto& file : embedding_files("eval")) {
    auto table = EmbeddingTable::load_word2vec(file);
    double acc = classify_nodes(table, dataset, frac, seed_);
    std::string method, dim;
    parse_emb_name(file, method, dim);
    json r;
    r["task"] = "node_classification";
    r["method"] = method;
    r["dimension"] = std::stoll(dim);
    r["metric"] = "accuracy";
    r["value"] = acc;
    r["config"] = {{"train_fraction", frac}};
    r["seed"] = seed_;
    std::string name = "report_classify_" + method + "_d" + dim + ".json";
    register_artifact("eval-classify", name);
    write_file(path_of(name), r.dump(2) + "\n");
    log_ << "[kgemb]   classify " << method << " d=" << dim << " acc=" << acc << "\n";
  }
}

void PipelineRunner::stage_eval_links() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  double sample_fraction = config_.get_real("eval", "link_sample_fraction", 0.02);
  double frac = config_.get_real("eval", "train_fraction", 0.8);
  auto dataset = build_link_dataset(graph, sample_fraction, seed_);
  for (const auto& file : embedding_files("eval")) {
    auto table = EmbeddingTable::load_word2vec(file);
    auto res = predict_links(table, dataset, frac, seed_);
    std::string method, dim;
    parse_emb_name(file, method, dim);
    json r;
    r["task"] = "link_prediction";
    r["method"] = method;
    r["dimension"] = std::stoll(dim);
    r["metric"] = "accuracy";
    r["value"] = res.accuracy;
    r["config"] = {{"train_fraction", frac},
                   {"sample_fraction", sample_fraction},
                   {"threshold", res.threshold}};
    r["seed"] = seed_;
    std::string name = "report_links_" + method + "_d" + dim + ".json";
    register_artifact("eval-links", name);
    write_file(path_of(name), r.dump(2) + "\n");
    log_ << "[kgemb]   links " << method << " d=" << dim << " acc=" << res.accuracy << "\n";
  }
}

void PipelineRunner::stage_eval_similarity() {
  auto graph = ConceptGraph::load_snapshot(path_of("graph.tsv"));
  auto sets = build_benchmark_sets(graph);
  std::size_t bootstraps = std::size_t(config_.get_int("eval", "bootstrap_count", 10000));
  double alpha = config_.get_real("eval", "alpha", 0.05);

  for (const auto& file : embedding_files("eval")) {
    auto table = EmbeddingTable::load_word2vec(file);
    std::string method, dim;
    parse_emb_name(file, method, dim);
    json r;
    r["task"] = "concept_similarity";
    r["method"] = method;
    r["dimension"] = std::stoll(dim);
    r["metric"] = "bootstrap_power";
    r["config"] = {{"bootstrap_count", bootstraps}, {"alpha", alpha}};
    r["seed"] = seed_;
    json values = json::object();
    for (const auto& s : sets) {
      if (s.pairs.empty()) {
        values[s.name] = nullptr;
        continue;
      }
      auto rep = bootstrap_power(table, s, bootstraps, alpha, seed_, SimilarityKind::Cosine);
      values[s.name] = rep.power;
      if (table.geometry == Geometry::Hyperbolic) {
        auto rep2 = bootstrap_power(table, s, bootstraps, alpha, seed_,
                                    SimilarityKind::NegativePoincare);
        values[s.name + "_neg_distance"] = rep2.power;
      }
      // plot-ready histogram of the null distribution
      std::ostringstream hist;
      hist << "similarity\n";
      for (double v : rep.null_samples) hist << format_real(v) << "\n";
      std::string hname = "null_hist_" + method + "_d" + dim + "_" + s.name + ".tsv";
      register_artifact("eval-similarity", hname);
      write_file(path_of(hname), hist.str());
    }
    r["value"] = values;
    std::string name = "report_similarity_" + method + "_d" + dim + ".json";
    register_artifact("eval-similarity", name);
    write_file(path_of(name), r.dump(2) + "\n");
    log_ << "[kgemb]   similarity " << method << " d=" << dim << "\n";
  }
}

void PipelineRunner::stage_eval_patient() {
  std::vector<VisitSequence> cohort;
  auto cohort_path = config_.get("patient", "cohort");
  if (!cohort_path.empty()) {
    cohort = load_cohort(cohort_path);
  } else {
    CohortConfig cc;
    cc.n_patients = std::size_t(config_.get_int("patient", "n_patients", 200));
    cc.vocabulary_size = std::size_t(config_.get_int("patient", "vocabulary_size", 100));
    cc.visits_per_patient = std::size_t(config_.get_int("patient", "visits_per_patient", 8));
    cc.codes_per_visit = std::size_t(config_.get_int("patient", "codes_per_visit", 3));
    cc.zipf_exponent = config_.get_real("patient", "zipf_exponent", 1.0);
    cc.seed = seed_;
    cc.rule = config_.get("patient", "rule", "zipf") == "cycle"
                  ? CohortConfig::Rule::DeterministicCycle
                  : CohortConfig::Rule::MarkovZipf;
    cohort = generate_synthetic_cohort(cc);
    register_artifact("eval-patient", "cohort.jsonl");
    save_cohort(cohort, path_of("cohort.jsonl"));
  }

  auto grouping_path = config_.get("patient", "code_grouping");
  if (!grouping_path.empty())
    cohort = apply_code_grouping(cohort, load_code_grouping(grouping_path));

  std::size_t m = 0;
  for (const auto& s : cohort)
    for (const auto& v : s.visits)
      for (int c : v) m = std::max(m, std::size_t(c) + 1);

  // patient-disjoint split
  double test_fraction = config_.get_real("patient", "test_fraction", 0.2);
  std::size_t n_test = std::max<std::size_t>(1, std::size_t(test_fraction * cohort.size()));
  std::vector<VisitSequence> test(cohort.end() - n_test, cohort.end());
  std::vector<VisitSequence> train(cohort.begin(), cohort.end() - n_test);

  for (const auto& file : embedding_files("patient")) {
    auto table = EmbeddingTable::load_word2vec(file);
    // codes map onto embedding rows; an explicit code->cui TSV can override
    CodeMap code_map;
    auto map_path = config_.get("patient", "code_map");
    if (!map_path.empty()) {
      std::unordered_map<std::string, std::size_t> cui_row;
      for (std::size_t i = 0; i < table.size(); ++i) cui_row[table.id_to_cui[i]] = i;
      std::ifstream in(map_path);
      std::string line;
      while (std::getline(in, line)) {
        auto f = split(line, '\t');
        if (f.size() < 2) continue;
        auto it = cui_row.find(f[1]);
        if (it != cui_row.end()) code_map[std::stoi(f[0])] = it->second;
      }
    } else {
      for (std::size_t c = 0; c < m && c < table.size(); ++c) code_map[int(c)] = c;
    }

    PatientModelConfig pc;
    pc.vocabulary_size = m;
    pc.embedding_dim = table.dim;
    pc.hidden_size = std::size_t(config_.get_int("patient", "hidden_size", 128));
    pc.epochs = std::size_t(config_.get_int("patient", "epochs", 20));
    pc.learning_rate = config_.get_real("patient", "learning_rate", 0.05);
    pc.seed = seed_;

    auto trained = train_patient_model(train, table, code_map, pc);
    auto freq = count_code_frequency(train, m);

    std::size_t topk = std::size_t(config_.get_int("patient", "top_k", 20));
    std::size_t min_visits = std::size_t(config_.get_int("patient", "rare_min_visits", 5));
    std::vector<PredictionObjective> objectives = {
        {PredictionObjective::Kind::AllDiagnoses, topk, min_visits},
        {PredictionObjective::Kind::FrequentTopK, topk, min_visits},
        {PredictionObjective::Kind::RareTopK, topk, min_visits}};

    std::string method, dim;
    parse_emb_name(file, method, dim);
    json r;
    r["task"] = "patient_state_prediction";
    r["method"] = method;
    r["dimension"] = std::stoll(dim);
    r["metric"] = "recall";
    r["seed"] = seed_;
    r["config"] = {{"hidden_size", pc.hidden_size},
                   {"epochs", pc.epochs},
                   {"vocabulary_size", m},
                   {"top_k", topk},
                   {"rare_min_visits", min_visits}};
    json values = json::object();
    for (const auto& obj : objectives) {
      auto score = evaluate_prediction(trained.model, test, table, code_map, obj, freq);
      json entry;
      entry["objective"] = score.objective;
      entry["k"] = obj.k;
      entry["score"] = score.score;
      entry["n_visits_evaluated"] = score.n_visits_evaluated;
      values[score.objective] = entry;
    }
    r["value"] = values;
    r["loss_curve"] = trained.loss_curve;
    std::string name = "report_patient_" + method + "_d" + dim + ".json";
    register_artifact("eval-patient", name);
    write_file(path_of(name), r.dump(2) + "\n");
    log_ << "[kgemb]   patient " << method << " d=" << dim << "\n";
  }
}

void PipelineRunner::stage_report() {
  // combined TSV over all task reports plus metric-vs-dimension curves
  struct Row { std::string task, method; long dim; std::string metric; std::string value; };
  std::vector<Row> rows;
  std::map<std::string, std::map<std::pair<std::string, long>, double>> curves;  // task -> (method,d) -> value

  for (auto& e : fs::directory_iterator(out_dir_)) {
    auto name = e.path().filename().string();
    if (name.rfind("report_", 0) != 0 || e.path().extension() != ".json") continue;
    auto j = json::parse(read_file(e.path().string()), nullptr, false);
    if (j.is_discarded()) continue;
    Row row;
    row.task = j.value("task", "?");
    row.method = j.value("method", "?");
    row.dim = j.value("dimension", 0);
    row.metric = j.value("metric", "?");
    if (j["value"].is_number()) {
      row.value = format_real(j["value"].get<double>(), 4);
      curves[row.task][{row.method, row.dim}] = j["value"].get<double>();
    } else {
      row.value = j["value"].dump();
      if (j["value"].is_object())
        for (auto& [k, v] : j["value"].items())
          if (v.is_number()) curves[row.task + ":" + k][{row.method, row.dim}] = v.get<double>();
          else if (v.is_object() && v.contains("score"))
            curves[row.task + ":" + k][{row.method, row.dim}] = v["score"].get<double>();
    }
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.task, a.method, a.dim) < std::tie(b.task, b.method, b.dim);
  });

  std::ostringstream combined;
  combined << "task\tmethod\tdimension\tmetric\tvalue\n";
  for (const auto& r : rows)
    combined << r.task << '\t' << r.method << '\t' << r.dim << '\t' << r.metric << '\t'
             << r.value << '\n';
  register_artifact("report", "combined_results.tsv");
  write_file(path_of("combined_results.tsv"), combined.str());

  std::ostringstream curve;
  curve << "task\tmethod\tdimension\tvalue\n";
  for (const auto& [task, points] : curves)
    for (const auto& [key, value] : points)
      curve << task << '\t' << key.first << '\t' << key.second << '\t'
            << format_real(value, 4) << '\n';
  register_artifact("report", "curves.tsv");
  write_file(path_of("curves.tsv"), curve.str());
}

std::vector<std::string> PipelineRunner::manifest_paths() const {
  std::vector<std::string> out;
  for (const auto& a : artifacts_) out.push_back(a.path);
  return out;
}

void PipelineRunner::write_manifest() {
  json m;
  m["seed"] = seed_;
  m["workers"] = workers_;
  json cfg = json::object();
  for (const auto& [section, kvs] : config_.sections()) {
    json s = json::object();
    for (const auto& [k, v] : kvs) s[k] = v;
    cfg[section] = s;
  }
  m["config"] = cfg;
  json arts = json::array();
  for (auto& a : artifacts_) {
    if (!fs::exists(path_of(a.path))) continue;
    json e;
    e["path"] = a.path;
    e["stage"] = a.stage;
    e["sha256"] = sha256_file_hex(path_of(a.path));
    arts.push_back(e);
  }
  m["artifacts"] = arts;
  write_file(path_of("manifest.json"), m.dump(2) + "\n");
}

}  // namespace kgemb
