#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgemb/embedding.hpp"

namespace kgemb {

struct PoincareConfig {
  std::size_t dimension = 50;
  std::size_t epochs = 50;
  double learning_rate = 0.1;
  std::size_t burn_in_epochs = 10;
  double burn_in_lr_divisor = 10.0;
  std::size_t negatives_per_positive = 10;
  double l2_coefficient = 1e-5;
  double ball_epsilon = 1e-5;
  std::uint64_t seed = 1;
};

struct OutsideBall : std::runtime_error {
  OutsideBall() : std::runtime_error("vector lies on or outside the unit ball") {}
};

struct EmptyEdgeSet : std::runtime_error {
  EmptyEdgeSet() : std::runtime_error("no hierarchical edges to train on") {}
};

// arcosh(1 + 2 ||u-v||^2 / ((1-||u||^2)(1-||v||^2)))
double poincare_distance(std::span<const double> u, std::span<const double> v);

// Euclidean partials of the distance; grad_u/grad_v accumulate += scale * d/du.
void poincare_distance_gradient(std::span<const double> u, std::span<const double> v,
                                double scale, std::span<double> grad_u,
                                std::span<double> grad_v);

// Softmax term over {v} u negatives plus l2 penalty over the involved rows.
// Returns the loss for one positive pair; gradients accumulate into grad rows
// indexed like [u, v, negatives...].
double poincare_pair_loss(std::span<const double> u, std::span<const double> v,
                          const std::vector<std::span<const double>>& negatives,
                          double l2_coefficient,
                          std::vector<std::vector<double>>* gradients = nullptr);

// Riemannian SGD step with projection back into the ball.
std::vector<double> riemannian_update(std::span<const double> theta_row,
                                      std::span<const double> euclidean_grad, double lr,
                                      double ball_epsilon);

EmbeddingTable poincare_train(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                              std::size_t num_nodes, const PoincareConfig& config,
                              const std::vector<std::string>& id_to_cui);

}  // namespace kgemb
