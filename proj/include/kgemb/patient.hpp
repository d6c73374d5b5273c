#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgemb/embedding.hpp"

namespace kgemb {

struct VisitSequence {
  std::string patient_id;
  std::vector<std::vector<int>> visits;  // ordered code sets, codes < vocabulary size
};

struct PatientModelConfig {
  std::size_t vocabulary_size = 0;   // m
  std::size_t embedding_dim = 0;     // d, matches the concept table
  std::size_t hidden_size = 128;     // h
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;
};

struct NoMappedCodes : std::runtime_error {
  NoMappedCodes() : std::runtime_error("no code in the visit maps to an embedded concept") {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error("shape mismatch: " + what) {}
};

struct EmptyDataset : std::runtime_error {
  EmptyDataset() : std::runtime_error("no usable training sequences") {}
};

// code -> dense row in the concept embedding table
using CodeMap = std::unordered_map<int, std::size_t>;

struct VisitVector {
  std::vector<double> values;  // mean of mapped code embeddings
  std::size_t skipped_codes = 0;
};

VisitVector embed_visit(const std::vector<int>& code_set, const EmbeddingTable& table,
                        const CodeMap& code_to_row);

// Single-layer LSTM with a softmax head over the code vocabulary. Parameters
// live in one flat vector: gate weights (4h x (d+h)), gate bias (4h),
// output weights (m x h), output bias (m). Gate order: input, forget,
// output, candidate.
struct PatientModel {
  PatientModelConfig config;
  std::vector<double> params;

  static std::size_t param_count(const PatientModelConfig& c);
  static PatientModel init(const PatientModelConfig& c);
  static PatientModel zeros(const PatientModelConfig& c);
};

struct LstmForward {
  std::vector<std::vector<double>> hidden;  // h_1..h_t
  std::vector<double> prediction;           // softmax over m codes at the last step
};

LstmForward lstm_forward(const std::vector<std::vector<double>>& visit_vectors,
                         const PatientModel& model);

// Mean cross-entropy over all prefixes of one sequence (target = normalized
// multi-hot of the following visit). Accumulates parameter gradients when
// grad is non-null.
double sequence_loss(const std::vector<std::vector<double>>& visit_vectors,
                     const std::vector<std::vector<int>>& target_visits,
                     const PatientModel& model, std::vector<double>* grad = nullptr);

struct TrainResult {
  PatientModel model;
  std::vector<double> loss_curve;  // per-epoch mean
};

TrainResult train_patient_model(const std::vector<VisitSequence>& sequences,
                                const EmbeddingTable& table, const CodeMap& code_to_row,
                                const PatientModelConfig& config);

struct PredictionObjective {
  enum class Kind { AllDiagnoses, FrequentTopK, RareTopK } kind = Kind::AllDiagnoses;
  std::size_t k = 20;
  std::size_t min_visits = 100;  // RareTopK floor, scaled down for desk data
};

struct PredictionScore {
  std::string objective;
  double score = 0;
  std::size_t n_visits_evaluated = 0;
};

PredictionScore evaluate_prediction(const PatientModel& model,
                                    const std::vector<VisitSequence>& test_sequences,
                                    const EmbeddingTable& table, const CodeMap& code_to_row,
                                    const PredictionObjective& objective,
                                    const std::vector<std::size_t>& code_frequency);

// |top-k intersect target| / min(k, |target|), averaged over predicted visits.
double recall_at_k(const PatientModel& model, const std::vector<VisitSequence>& sequences,
                   const EmbeddingTable& table, const CodeMap& code_to_row, std::size_t k);

// code occurrence counts over all visits
std::vector<std::size_t> count_code_frequency(const std::vector<VisitSequence>& sequences,
                                              std::size_t vocabulary_size);

struct CohortConfig {
  enum class Rule { DeterministicCycle, MarkovZipf } rule = Rule::MarkovZipf;
  std::size_t n_patients = 100;
  std::size_t vocabulary_size = 100;  // m
  std::size_t visits_per_patient = 8;
  std::size_t codes_per_visit = 3;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;
};

std::vector<VisitSequence> generate_synthetic_cohort(const CohortConfig& config);

// JSON-lines: {"patient_id": ..., "visits": [[codes...], ...]}
void save_cohort(const std::vector<VisitSequence>& sequences, const std::string& path);
std::vector<VisitSequence> load_cohort(const std::string& path);

// raw_code -> group_code TSV
std::unordered_map<int, int> load_code_grouping(const std::string& path);
std::vector<VisitSequence> apply_code_grouping(const std::vector<VisitSequence>& sequences,
                                               const std::unordered_map<int, int>& grouping);

}  // namespace kgemb
