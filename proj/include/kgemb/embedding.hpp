#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kgemb {

enum class Geometry { Euclidean, Hyperbolic };

std::string to_string(Geometry g);

// Dense id -> d-dimensional row, row-major.
struct EmbeddingTable {
  std::size_t dim = 0;
  Geometry geometry = Geometry::Euclidean;
  std::vector<std::string> id_to_cui;
  std::vector<double> data;

  std::size_t size() const { return id_to_cui.size(); }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

  bool finite() const;
  double max_norm() const;

  // word2vec text format: "<count> <dim>" header, then "<cui> <v1> ... <vd>",
  // 6 decimal places. Sidecar JSON at path + ".meta.json" records geometry.
  void save_word2vec(const std::string& path) const;
  static EmbeddingTable load_word2vec(const std::string& path);
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace kgemb
