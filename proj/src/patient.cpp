#include "kgemb/patient.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "kgemb/util.hpp"

namespace kgemb {

VisitVector embed_visit(const std::vector<int>& code_set, const EmbeddingTable& table,
                        const CodeMap& code_to_row) {
  VisitVector out;
  out.values.assign(table.dim, 0.0);
  std::size_t mapped = 0;
  for (int code : code_set) {
    auto it = code_to_row.find(code);
    if (it == code_to_row.end() || it->second >= table.size()) {
      ++out.skipped_codes;
      continue;
    }
    auto r = table.row(it->second);
    for (std::size_t i = 0; i < table.dim; ++i) out.values[i] += r[i];
    ++mapped;
  }
  if (mapped == 0) throw NoMappedCodes();
  for (double& v : out.values) v /= double(mapped);
  return out;
}

std::size_t PatientModel::param_count(const PatientModelConfig& c) {
  const std::size_t h = c.hidden_size, d = c.embedding_dim, m = c.vocabulary_size;
  return 4 * h * (d + h) + 4 * h + m * h + m;
}

PatientModel PatientModel::zeros(const PatientModelConfig& c) {
  return {c, std::vector<double>(param_count(c), 0.0)};
}

PatientModel PatientModel::init(const PatientModelConfig& c) {
  PatientModel mdl = zeros(c);
  auto rng = make_rng(c.seed);
  const double scale = 1.0 / std::sqrt(double(c.hidden_size));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : mdl.params) v = u(rng);
  // forget-gate bias starts at 1
  const std::size_t h = c.hidden_size, d = c.embedding_dim;
  double* bg = mdl.params.data() + 4 * h * (d + h);
  for (std::size_t i = h; i < 2 * h; ++i) bg[i] = 1.0;
  return mdl;
}

namespace {

struct ParamView {
  const double* wg;    // 4h x (d+h)
  const double* bg;    // 4h
  const double* wout;  // m x h
  const double* bout;  // m
  std::size_t d, h, m;

  static ParamView of(const double* p, const PatientModelConfig& c) {
    ParamView v;
    v.d = c.embedding_dim;
    v.h = c.hidden_size;
    v.m = c.vocabulary_size;
    v.wg = p;
    v.bg = p + 4 * v.h * (v.d + v.h);
    v.wout = v.bg + 4 * v.h;
    v.bout = v.wout + v.m * v.h;
    return v;
  }
};

struct StepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> gates;  // i f o g, each h wide, post-activation
  std::vector<double> c, tanh_c, h;
  std::vector<double> yhat;
};

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void lstm_step(const ParamView& p, const std::vector<double>& x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               StepCache& cache) {
  const std::size_t h = p.h, d = p.d;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.gates.assign(4 * h, 0.0);
  for (std::size_t r = 0; r < 4 * h; ++r) {
    const double* row = p.wg + r * (d + h);
    double s = p.bg[r];
    for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
    for (std::size_t j = 0; j < h; ++j) s += row[d + j] * h_prev[j];
    cache.gates[r] = s;
  }
  cache.c.assign(h, 0.0);
  cache.tanh_c.assign(h, 0.0);
  cache.h.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    double gi = sigm(cache.gates[j]);
    double gf = sigm(cache.gates[h + j]);
    double go = sigm(cache.gates[2 * h + j]);
    double gg = std::tanh(cache.gates[3 * h + j]);
    cache.gates[j] = gi;
    cache.gates[h + j] = gf;
    cache.gates[2 * h + j] = go;
    cache.gates[3 * h + j] = gg;
    cache.c[j] = gf * c_prev[j] + gi * gg;
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = go * cache.tanh_c[j];
  }
}

std::vector<double> softmax_head(const ParamView& p, const std::vector<double>& h) {
  std::vector<double> y(p.m);
  for (std::size_t r = 0; r < p.m; ++r) {
    const double* row = p.wout + r * p.h;
    double s = p.bout[r];
    for (std::size_t j = 0; j < p.h; ++j) s += row[j] * h[j];
    y[r] = s;
  }
  double mx = *std::max_element(y.begin(), y.end());
  double z = 0;
  for (double& v : y) z += (v = std::exp(v - mx));
  for (double& v : y) v /= z;
  return y;
}

}  // namespace

LstmForward lstm_forward(const std::vector<std::vector<double>>& visit_vectors,
                         const PatientModel& model) {
  if (visit_vectors.empty()) throw ShapeMismatch("empty input sequence");
  if (model.params.size() != PatientModel::param_count(model.config))
    throw ShapeMismatch("parameter vector size");
  for (const auto& v : visit_vectors)
    if (v.size() != model.config.embedding_dim) throw ShapeMismatch("visit vector dimension");

  auto p = ParamView::of(model.params.data(), model.config);
  LstmForward out;
  std::vector<double> h(p.h, 0.0), c(p.h, 0.0);
  StepCache cache;
  for (const auto& x : visit_vectors) {
    lstm_step(p, x, h, c, cache);
    h = cache.h;
    c = cache.c;
    out.hidden.push_back(h);
  }
  out.prediction = softmax_head(p, h);
  return out;
}

double sequence_loss(const std::vector<std::vector<double>>& visit_vectors,
                     const std::vector<std::vector<int>>& target_visits,
                     const PatientModel& model, std::vector<double>* grad) {
  if (visit_vectors.size() != target_visits.size() || visit_vectors.empty())
    throw ShapeMismatch("inputs and targets must align");
  if (model.params.size() != PatientModel::param_count(model.config))
    throw ShapeMismatch("parameter vector size");

  auto p = ParamView::of(model.params.data(), model.config);
  const std::size_t T = visit_vectors.size();
  const std::size_t h = p.h, d = p.d, m = p.m;

  std::vector<StepCache> steps(T);
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  double loss = 0;
  std::vector<std::vector<double>> targets(T);
  for (std::size_t t = 0; t < T; ++t) {
    lstm_step(p, visit_vectors[t], hs, cs, steps[t]);
    hs = steps[t].h;
    cs = steps[t].c;
    steps[t].yhat = softmax_head(p, hs);

    auto& tgt = targets[t];
    tgt.assign(m, 0.0);
    std::size_t valid = 0;
    for (int code : target_visits[t]) {
      if (code >= 0 && std::size_t(code) < m) {
        tgt[code] += 1.0;
        ++valid;
      }
    }
    if (valid == 0) throw ShapeMismatch("target visit has no in-vocabulary code");
    for (double& v : tgt) v /= double(valid);
    for (std::size_t j = 0; j < m; ++j)
      if (tgt[j] > 0) loss -= tgt[j] * std::log(std::max(steps[t].yhat[j], 1e-300));
  }
  loss /= double(T);
  if (!grad) return loss;

  grad->assign(model.params.size(), 0.0);
  double* gwg = grad->data();
  double* gbg = gwg + 4 * h * (d + h);
  double* gwout = gbg + 4 * h;
  double* gbout = gwout + m * h;

  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
  std::vector<double> dh(h), dy(m), dz(4 * h);
  for (std::size_t t = T; t-- > 0;) {
    const StepCache& s = steps[t];
    // output head
    for (std::size_t j = 0; j < m; ++j) dy[j] = (s.yhat[j] - targets[t][j]) / double(T);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      double* gr = gwout + r * h;
      const double* wr = p.wout + r * h;
      gbout[r] += dy[r];
      for (std::size_t j = 0; j < h; ++j) {
        gr[j] += dy[r] * s.h[j];
        dh[j] += wr[j] * dy[r];
      }
    }
    for (std::size_t j = 0; j < h; ++j) dh[j] += dh_next[j];

    for (std::size_t j = 0; j < h; ++j) {
      double gi = s.gates[j], gf = s.gates[h + j], go = s.gates[2 * h + j],
             gg = s.gates[3 * h + j];
      double dgo = dh[j] * s.tanh_c[j];
      double dc = dc_next[j] + dh[j] * go * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
      double dgi = dc * gg;
      double dgg = dc * gi;
      double dgf = dc * s.c_prev[j];
      dc_next[j] = dc * gf;
      dz[j] = dgi * gi * (1.0 - gi);
      dz[h + j] = dgf * gf * (1.0 - gf);
      dz[2 * h + j] = dgo * go * (1.0 - go);
      dz[3 * h + j] = dgg * (1.0 - gg * gg);
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      double* gr = gwg + r * (d + h);
      const double* wr = p.wg + r * (d + h);
      gbg[r] += dz[r];
      for (std::size_t j = 0; j < d; ++j) gr[j] += dz[r] * s.x[j];
      for (std::size_t j = 0; j < h; ++j) {
        gr[d + j] += dz[r] * s.h_prev[j];
        dh_next[j] += wr[d + j] * dz[r];
      }
    }
  }
  return loss;
}

namespace {

std::vector<std::vector<double>> visit_vectors_of(const VisitSequence& seq,
                                                  const EmbeddingTable& table,
                                                  const CodeMap& code_to_row,
                                                  std::size_t upto) {
  std::vector<std::vector<double>> out;
  out.reserve(upto);
  for (std::size_t t = 0; t < upto; ++t)
    out.push_back(embed_visit(seq.visits[t], table, code_to_row).values);
  return out;
}

}  // namespace

TrainResult train_patient_model(const std::vector<VisitSequence>& sequences,
                                const EmbeddingTable& table, const CodeMap& code_to_row,
                                const PatientModelConfig& config) {
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    if (sequences[i].visits.size() >= 2) usable.push_back(i);
  if (usable.empty()) throw EmptyDataset();

  TrainResult result;
  result.model = PatientModel::init(config);
  auto rng = make_rng(config.seed ^ 0xbeef);
  std::vector<double> grad;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(usable.begin(), usable.end(), rng);
    double epoch_loss = 0;
    for (std::size_t si : usable) {
      const auto& seq = sequences[si];
      auto inputs = visit_vectors_of(seq, table, code_to_row, seq.visits.size() - 1);
      std::vector<std::vector<int>> targets(seq.visits.begin() + 1, seq.visits.end());
      epoch_loss += sequence_loss(inputs, targets, result.model, &grad);

      double gn = 0;
      for (double g : grad) gn += g * g;
      gn = std::sqrt(gn);
      double scale = config.learning_rate;
      if (gn > config.grad_clip) scale *= config.grad_clip / gn;
      for (std::size_t i = 0; i < grad.size(); ++i) result.model.params[i] -= scale * grad[i];
    }
    result.loss_curve.push_back(epoch_loss / double(usable.size()));
  }
  return result;
}

namespace {

// indices of y sorted by descending score, ties by lower code id
std::vector<std::size_t> ranked(const std::vector<double>& y) {
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
  return idx;
}

}  // namespace

std::vector<std::size_t> count_code_frequency(const std::vector<VisitSequence>& sequences,
                                              std::size_t vocabulary_size) {
  std::vector<std::size_t> counts(vocabulary_size, 0);
  for (const auto& seq : sequences)
    for (const auto& visit : seq.visits) {
      std::vector<int> uniq(visit);
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (int c : uniq)
        if (c >= 0 && std::size_t(c) < vocabulary_size) ++counts[c];
    }
  return counts;
}

PredictionScore evaluate_prediction(const PatientModel& model,
                                    const std::vector<VisitSequence>& test_sequences,
                                    const EmbeddingTable& table, const CodeMap& code_to_row,
                                    const PredictionObjective& objective,
                                    const std::vector<std::size_t>& code_frequency) {
  const std::size_t m = model.config.vocabulary_size;

  // which codes the objective scores against
  std::vector<bool> allowed(m, true);
  std::string name = "all_diagnoses";
  if (objective.kind == PredictionObjective::Kind::FrequentTopK ||
      objective.kind == PredictionObjective::Kind::RareTopK) {
    std::vector<std::size_t> codes;
    for (std::size_t c = 0; c < m; ++c) {
      if (objective.kind == PredictionObjective::Kind::RareTopK &&
          code_frequency[c] < objective.min_visits)
        continue;
      if (code_frequency[c] > 0 || objective.kind == PredictionObjective::Kind::RareTopK)
        codes.push_back(c);
    }
    bool frequent = objective.kind == PredictionObjective::Kind::FrequentTopK;
    std::stable_sort(codes.begin(), codes.end(), [&](std::size_t a, std::size_t b) {
      return frequent ? code_frequency[a] > code_frequency[b]
                      : code_frequency[a] < code_frequency[b];
    });
    if (codes.size() > objective.k) codes.resize(objective.k);
    allowed.assign(m, false);
    for (std::size_t c : codes) allowed[c] = true;
    name = (frequent ? "frequent_top_" : "rare_top_") + std::to_string(objective.k);
  }

  double total = 0;
  std::size_t n_visits = 0;
  for (const auto& seq : test_sequences) {
    if (seq.visits.size() < 2) continue;
    for (std::size_t t = 1; t < seq.visits.size(); ++t) {
      auto inputs = visit_vectors_of(seq, table, code_to_row, t);
      auto fwd = lstm_forward(inputs, model);

      std::vector<int> target;
      for (int c : seq.visits[t])
        if (c >= 0 && std::size_t(c) < m && allowed[c]) target.push_back(c);
      std::sort(target.begin(), target.end());
      target.erase(std::unique(target.begin(), target.end()), target.end());
      if (target.empty()) continue;

      auto order = ranked(fwd.prediction);
      std::size_t hits = 0, taken = 0;
      for (std::size_t c : order) {
        if (!allowed[c]) continue;
        if (std::binary_search(target.begin(), target.end(), int(c))) ++hits;
        if (++taken == target.size()) break;
      }
      total += double(hits) / double(target.size());
      ++n_visits;
    }
  }

  PredictionScore score;
  score.objective = name;
  score.n_visits_evaluated = n_visits;
  score.score = n_visits ? total / double(n_visits) : 0.0;
  return score;
}

double recall_at_k(const PatientModel& model, const std::vector<VisitSequence>& sequences,
                   const EmbeddingTable& table, const CodeMap& code_to_row, std::size_t k) {
  const std::size_t m = model.config.vocabulary_size;
  double total = 0;
  std::size_t n = 0;
  for (const auto& seq : sequences) {
    if (seq.visits.size() < 2) continue;
    for (std::size_t t = 1; t < seq.visits.size(); ++t) {
      auto inputs = visit_vectors_of(seq, table, code_to_row, t);
      auto fwd = lstm_forward(inputs, model);
      std::vector<int> target;
      for (int c : seq.visits[t])
        if (c >= 0 && std::size_t(c) < m) target.push_back(c);
      std::sort(target.begin(), target.end());
      target.erase(std::unique(target.begin(), target.end()), target.end());
      if (target.empty()) continue;
      auto order = ranked(fwd.prediction);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
        if (std::binary_search(target.begin(), target.end(), int(order[i]))) ++hits;
      total += double(hits) / double(std::min(k, target.size()));
      ++n;
    }
  }
  return n ? total / double(n) : 0.0;
}

std::vector<VisitSequence> generate_synthetic_cohort(const CohortConfig& config) {
  auto rng = make_rng(config.seed);
  std::vector<VisitSequence> out;
  out.reserve(config.n_patients);

  if (config.rule == CohortConfig::Rule::DeterministicCycle) {
    // three disjoint code sets, visits cycle through them
    const std::size_t span = config.codes_per_visit;
    if (config.vocabulary_size < 3 * span)
      throw std::invalid_argument("vocabulary too small for deterministic cycle");
    for (std::size_t pid = 0; pid < config.n_patients; ++pid) {
      VisitSequence seq;
      seq.patient_id = "P" + std::to_string(pid);
      std::size_t state = pid % 3;
      for (std::size_t t = 0; t < config.visits_per_patient; ++t) {
        std::vector<int> visit;
        for (std::size_t j = 0; j < span; ++j) visit.push_back(int(state * span + j));
        seq.visits.push_back(std::move(visit));
        state = (state + 1) % 3;
      }
      out.push_back(std::move(seq));
    }
    return out;
  }

  // long-tail code draws: P(c) proportional to 1/(c+1)^s
  std::vector<double> weights(config.vocabulary_size);
  for (std::size_t c = 0; c < config.vocabulary_size; ++c)
    weights[c] = 1.0 / std::pow(double(c + 1), config.zipf_exponent);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());

  for (std::size_t pid = 0; pid < config.n_patients; ++pid) {
    VisitSequence seq;
    seq.patient_id = "P" + std::to_string(pid);
    for (std::size_t t = 0; t < config.visits_per_patient; ++t) {
      std::vector<int> visit;
      std::size_t guard = 0;
      while (visit.size() < config.codes_per_visit && guard++ < 1000) {
        int c = int(zipf(rng));
        if (std::find(visit.begin(), visit.end(), c) == visit.end()) visit.push_back(c);
      }
      seq.visits.push_back(std::move(visit));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

void save_cohort(const std::vector<VisitSequence>& sequences, const std::string& path) {
  std::ostringstream out;
  for (const auto& seq : sequences) {
    nlohmann::json j;
    j["patient_id"] = seq.patient_id;
    j["visits"] = seq.visits;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

std::vector<VisitSequence> load_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cohort file: " + path);
  std::vector<VisitSequence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    VisitSequence seq;
    seq.patient_id = j.at("patient_id").get<std::string>();
    seq.visits = j.at("visits").get<std::vector<std::vector<int>>>();
    out.push_back(std::move(seq));
  }
  return out;
}

std::unordered_map<int, int> load_code_grouping(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open code grouping: " + path);
  std::unordered_map<int, int> map;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    if (f.size() < 2) continue;
    map[std::stoi(f[0])] = std::stoi(f[1]);
  }
  return map;
}

std::vector<VisitSequence> apply_code_grouping(const std::vector<VisitSequence>& sequences,
                                               const std::unordered_map<int, int>& grouping) {
  std::vector<VisitSequence> out = sequences;
  for (auto& seq : out)
    for (auto& visit : seq.visits) {
      for (int& c : visit) {
        auto it = grouping.find(c);
        if (it != grouping.end()) c = it->second;
      }
      std::sort(visit.begin(), visit.end());
      visit.erase(std::unique(visit.begin(), visit.end()), visit.end());
    }
  return out;
}

}  // namespace kgemb
