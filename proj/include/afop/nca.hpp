#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace afop {

struct NcaConfig {
  double lambda = -1.0;       // < 0 -> 1/n at fit time
  double learning_rate = 0.4; // initial step; adapted multiplicatively
  int max_iters = 30;
  int batch_size = 2000;      // mini-batching kicks in above this many samples
  std::uint64_t seed = 0;
};

struct NcaWeights {
  Eigen::VectorXd weights;            // importance = squared learned scale, >= 0
  std::vector<double> objective_trace;
  NcaConfig config;
};

/// Diagonal feature-weighting NCA: maximizes the mean leave-one-out
/// soft-nearest-neighbor correct-class probability under the weighted L1
/// metric d_w(i,j) = sum_d w_d^2 |x_id - x_jd|, minus lambda * sum_d w_d^2.
/// Gradient ascent from w = 1 with accept/reject step control; deterministic
/// for a fixed seed. Throws StatsError on a single class or non-finite input.
NcaWeights fit_nca(const Eigen::MatrixXd& X, const std::vector<int>& y,
                   const NcaConfig& config = {});

/// Indices sorted by importance descending, ties by ascending index.
std::vector<int> rank_features(const NcaWeights& weights);

}  // namespace afop
