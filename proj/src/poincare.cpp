#include "kgemb/poincare.hpp"

#include <algorithm>
#include <cmath>

#include "kgemb/util.hpp"

namespace kgemb {

namespace {

double sq_norm(std::span<const double> a) { return dot(a, a); }

double arcosh(double x) { return std::log(x + std::sqrt(x * x - 1.0)); }

double gamma_of(std::span<const double> u, std::span<const double> v, double& alpha,
                double& beta) {
  double uu = sq_norm(u), vv = sq_norm(v);
  if (uu >= 1.0 || vv >= 1.0) throw OutsideBall();
  alpha = 1.0 - uu;
  beta = 1.0 - vv;
  double duv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double t = u[i] - v[i];
    duv += t * t;
  }
  double g = 1.0 + 2.0 * duv / (alpha * beta);
  return std::max(g, 1.0);
}

}  // namespace

double poincare_distance(std::span<const double> u, std::span<const double> v) {
  double alpha, beta;
  return arcosh(gamma_of(u, v, alpha, beta));
}

void poincare_distance_gradient(std::span<const double> u, std::span<const double> v,
                                double scale, std::span<double> grad_u,
                                std::span<double> grad_v) {
  double alpha, beta;
  double gamma = gamma_of(u, v, alpha, beta);
  if (gamma <= 1.0) return;  // distance zero, subgradient zero

  double uu = sq_norm(u), vv = sq_norm(v), uv = dot(u, v);
  double c = scale * 4.0 / std::sqrt(gamma * gamma - 1.0);
  double cu = c / beta;
  double cv = c / alpha;
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_u[i] += cu * ((vv - 2.0 * uv + 1.0) / (alpha * alpha) * u[i] - v[i] / alpha);
    grad_v[i] += cv * ((uu - 2.0 * uv + 1.0) / (beta * beta) * v[i] - u[i] / beta);
  }
}

double poincare_pair_loss(std::span<const double> u, std::span<const double> v,
                          const std::vector<std::span<const double>>& negatives,
                          double l2_coefficient,
                          std::vector<std::vector<double>>* gradients) {
  const std::size_t d = u.size();
  // denominator is the set {v} union negatives: a negative equal to the
  // positive merges instead of double-counting
  auto equals_v = [&](std::span<const double> w) {
    for (std::size_t i = 0; i < d; ++i)
      if (w[i] != v[i]) return false;
    return true;
  };
  std::vector<bool> merged(negatives.size());
  for (std::size_t k = 0; k < negatives.size(); ++k) merged[k] = equals_v(negatives[k]);

  std::vector<double> dists;
  dists.reserve(1 + negatives.size());
  dists.push_back(poincare_distance(u, v));
  for (const auto& w : negatives) dists.push_back(poincare_distance(u, w));

  double dmin = dists[0];
  for (std::size_t k = 0; k < negatives.size(); ++k)
    if (!merged[k]) dmin = std::min(dmin, dists[k + 1]);
  double z = std::exp(-(dists[0] - dmin));
  for (std::size_t k = 0; k < negatives.size(); ++k)
    if (!merged[k]) z += std::exp(-(dists[k + 1] - dmin));
  double loss = dists[0] - dmin + std::log(z);

  double l2 = sq_norm(u) + sq_norm(v);
  for (const auto& w : negatives) l2 += sq_norm(w);
  loss += l2_coefficient * l2;

  if (gradients) {
    auto& g = *gradients;
    g.assign(2 + negatives.size(), std::vector<double>(d, 0.0));
    // dL/d d_k = 1[k==0] - p_k over the deduplicated softmax
    for (std::size_t k = 0; k < dists.size(); ++k) {
      if (k > 0 && merged[k - 1]) continue;
      double p = std::exp(-(dists[k] - dmin)) / z;
      double scale = (k == 0 ? 1.0 : 0.0) - p;
      auto target = (k == 0) ? v : negatives[k - 1];
      auto& gt = (k == 0) ? g[1] : g[k + 1];
      poincare_distance_gradient(u, target, scale, g[0], gt);
    }
    for (std::size_t i = 0; i < d; ++i) {
      g[0][i] += 2.0 * l2_coefficient * u[i];
      g[1][i] += 2.0 * l2_coefficient * v[i];
    }
    for (std::size_t k = 0; k < negatives.size(); ++k)
      for (std::size_t i = 0; i < d; ++i)
        g[k + 2][i] += 2.0 * l2_coefficient * negatives[k][i];
  }
  return loss;
}

std::vector<double> riemannian_update(std::span<const double> theta_row,
                                      std::span<const double> euclidean_grad, double lr,
                                      double ball_epsilon) {
  double a = 1.0 - sq_norm(theta_row);
  double scale = lr * a * a / 4.0;
  std::vector<double> out(theta_row.begin(), theta_row.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= scale * euclidean_grad[i];

  double n = norm(out);
  double limit = 1.0 - ball_epsilon;
  if (n >= limit) {
    double r = limit / n;
    for (double& x : out) x *= r;
  }
  return out;
}

EmbeddingTable poincare_train(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                              std::size_t num_nodes, const PoincareConfig& config,
                              const std::vector<std::string>& id_to_cui) {
  if (edges.empty()) throw EmptyEdgeSet();
  const std::size_t d = config.dimension;

  EmbeddingTable table;
  table.dim = d;
  table.geometry = Geometry::Hyperbolic;
  table.id_to_cui = id_to_cui;
  table.data.resize(num_nodes * d);

  auto rng = make_rng(config.seed);
  {
    std::uniform_real_distribution<double> init(-0.001, 0.001);
    for (double& v : table.data) v = init(rng);
  }

  // edges are unordered for the loss: each epoch visits both orientations
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    pairs.emplace_back(a, b);
    pairs.emplace_back(b, a);
  }

  std::uniform_int_distribution<std::uint32_t> pick_node(0, std::uint32_t(num_nodes - 1));
  std::vector<std::vector<double>> grads;
  std::vector<std::uint32_t> negs(config.negatives_per_positive);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.learning_rate;
    if (epoch < config.burn_in_epochs) lr /= config.burn_in_lr_divisor;

    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (const auto& [u, v] : pairs) {
      for (auto& n : negs) {
        n = pick_node(rng);
        for (int tries = 0; (n == u || n == v) && tries < 100 && num_nodes > 2; ++tries)
          n = pick_node(rng);
      }
      std::vector<std::span<const double>> neg_rows;
      neg_rows.reserve(negs.size());
      for (auto n : negs) neg_rows.push_back(table.row(n));

      poincare_pair_loss(table.row(u), table.row(v), neg_rows, config.l2_coefficient, &grads);

      auto apply = [&](std::uint32_t id, const std::vector<double>& g) {
        auto updated = riemannian_update(table.row(id), g, lr, config.ball_epsilon);
        std::copy(updated.begin(), updated.end(), table.row(id).begin());
      };
      apply(u, grads[0]);
      apply(v, grads[1]);
      for (std::size_t k = 0; k < negs.size(); ++k) apply(negs[k], grads[k + 2]);
    }
  }
  return table;
}

}  // namespace kgemb
