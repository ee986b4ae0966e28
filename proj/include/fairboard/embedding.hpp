#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace fairboard::repr {

enum class EmbedMethod { Umap, Pca };

struct EmbedParams {
  EmbedMethod method = EmbedMethod::Umap;
  int n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  // Only the cosine metric is provided.
  std::string metric = "cosine";
  std::uint64_t seed = 42;
  // 0 selects 500 epochs up to 10000 points and 200 beyond.
  int n_epochs = 0;
  int negative_sample_rate = 5;
  double learning_rate = 1.0;
};

struct CurveParams {
  double a;
  double b;
};

// Least-squares fit of 1 / (1 + a d^(2b)) to the offset exponential membership
// curve on 300 points of [0, 3 * spread].
CurveParams find_ab_params(double spread, double min_dist);

// Principal-component scores on the first two axes of the centred data.
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x);

// n x 2 coordinates. Throws TooFewPoints when n <= n_neighbors for the
// neighbour-graph method.
Eigen::MatrixXd embed_2d(const Eigen::MatrixXd& x, const EmbedParams& params);

}  // namespace fairboard::repr
