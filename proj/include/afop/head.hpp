#pragma once

#include "afop/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

namespace afop {

/// One N-way-K-shot task. Support rows are grouped by class slot
/// (row slot*k_shot + j); queries in any order.
struct Episode {
  int n_way = 0;
  int k_shot = 0;
  Eigen::MatrixXd support;       // (n_way * k_shot) x D
  Eigen::MatrixXd query;         // n_query x D (may be empty)
  Eigen::VectorXi query_slots;   // class slot per query row
  std::vector<std::pair<int, Material>> class_map;  // slot -> (shape, material)

  int dim() const { return static_cast<int>(support.cols()); }
  int slot_of_support(int row) const { return row / k_shot; }
};

struct AdaptConfig {
  double lambda = 0.10;          // entropy regularizer coefficient
  int steps = 250;
  double learning_rate = 1.5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-episode cosine-softmax classifier state.
struct AdaptedHead {
  Eigen::MatrixXd W;             // n_way x D
  Eigen::VectorXd b;             // n_way
  double alpha = 10.0;           // temperature, fixed during adaptation
  AdaptConfig config;
  std::vector<double> loss_trace;  // length steps + 1, [0] = initial loss
};

/// Row n = mean of slot-n support embeddings. Throws EpisodeError on an
/// empty slot (k_shot < 1).
Eigen::MatrixXd compute_prototypes(const Episode& episode);

/// Rows scaled to unit norm; zero rows stay zero.
Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& m);

/// z_n = alpha * <x/|x|, w_n/|w_n|> + b_n. Zero-norm input or row
/// contributes cosine 0, never NaN.
Eigen::VectorXd head_logits(const Eigen::VectorXd& x, const AdaptedHead& head);

/// Softmax with max-subtraction.
Eigen::VectorXd posteriors(const Eigen::VectorXd& logits);

/// Argmax posterior; ties go to the smallest slot.
int predict(const Eigen::VectorXd& x, const AdaptedHead& head);

/// Mean over support of [-log p(y|x) + lambda * H(p(.|x))], 0 log 0 := 0.
double support_loss(const AdaptedHead& head, const Episode& episode);

struct HeadGradients {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

/// Analytic gradients of support_loss through the softmax, the cosine logits
/// and the row normalization dw = (I - w_hat w_hat^T)/|w| * dw_hat.
/// Zero-norm rows receive zero gradient.
HeadGradients loss_gradients(const AdaptedHead& head, const Episode& episode);

/// W <- row-normalized prototypes, b <- 0, then `steps` full-batch Adam
/// updates of (W, b) minimizing support_loss. Embeddings are never modified;
/// steps = 0 returns the initialization exactly. Reads only the support.
AdaptedHead adapt(const Episode& episode, double alpha, const AdaptConfig& config);

struct QueryResult {
  Eigen::VectorXi predictions;
  double accuracy = 0.0;
};

/// Forward-only query classification. Throws EpisodeError when there are no
/// queries and ShapeError on dimension mismatch.
QueryResult classify_queries(const Episode& episode, const AdaptedHead& head);

}  // namespace afop
