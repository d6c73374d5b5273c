#include "kgemb/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kgemb/util.hpp"

namespace kgemb {

std::string to_string(Geometry g) {
  return g == Geometry::Euclidean ? "Euclidean" : "Hyperbolic";
}

bool EmbeddingTable::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double EmbeddingTable::max_norm() const {
  double best = 0;
  for (std::size_t i = 0; i < size(); ++i) best = std::max(best, norm(row(i)));
  return best;
}

void EmbeddingTable::save_word2vec(const std::string& path) const {
  std::ostringstream out;
  out << size() << ' ' << dim << '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    out << id_to_cui[i];
    auto r = row(i);
    for (double v : r) out << ' ' << format_real(v);
    out << '\n';
  }
  write_file(path, out.str());

  nlohmann::json meta;
  meta["geometry"] = to_string(geometry);
  meta["dimension"] = dim;
  meta["count"] = size();
  write_file(path + ".meta.json", meta.dump(2) + "\n");
}

namespace {
[[noreturn]] void bad_embedding_file(const std::string& path, const std::string& why) {
  throw std::runtime_error("bad embedding file " + path + ": " + why);
}
}  // namespace

EmbeddingTable EmbeddingTable::load_word2vec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::size_t count = 0, dim = 0;
  if (!(in >> count >> dim)) bad_embedding_file(path, "missing header");

  EmbeddingTable t;
  t.dim = dim;
  t.id_to_cui.reserve(count);
  t.data.reserve(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    std::string cui;
    if (!(in >> cui)) bad_embedding_file(path, "truncated rows");
    t.id_to_cui.push_back(cui);
    for (std::size_t j = 0; j < dim; ++j) {
      double v;
      if (!(in >> v)) bad_embedding_file(path, "truncated vector");
      t.data.push_back(v);
    }
  }

  std::ifstream meta(path + ".meta.json");
  if (meta) {
    auto j = nlohmann::json::parse(meta, nullptr, false);
    if (!j.is_discarded() && j.value("geometry", "") == "Hyperbolic")
      t.geometry = Geometry::Hyperbolic;
  }
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) return 0;
  return dot(a, b) / (na * nb);
}

}  // namespace kgemb
