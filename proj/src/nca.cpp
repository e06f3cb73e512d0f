#include "afop/nca.hpp"

#include "afop/parallel.hpp"
#include "afop/rng.hpp"
#include "afop/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

namespace afop {

namespace {

/// Soft-nearest-neighbor objective and its gradient in the squared scales
/// v_d = w_d^2, evaluated on the rows `anchors` against themselves.
/// Anchor contributions are reduced in fixed block order so the result does
/// not depend on thread scheduling.
struct Evaluation {
  double objective = 0.0;        // mean_i p_i (regularizer applied by caller)
  Eigen::VectorXd grad_v;        // d/dv of mean_i p_i
};

Evaluation evaluate(const Eigen::MatrixXd& Xt, const std::vector<int>& y,
                    const std::vector<int>& anchors, const Eigen::VectorXd& v,
                    bool with_grad) {
  const int n = static_cast<int>(anchors.size());
  const int d = static_cast<int>(Xt.rows());  // samples are columns
  constexpr int kBlocks = 64;
  const int blocks = std::min(kBlocks, n);
  std::vector<double> block_obj(blocks, 0.0);
  std::vector<Eigen::VectorXd> block_grad;
  if (with_grad) block_grad.assign(blocks, Eigen::VectorXd::Zero(d));

  parallel_for(blocks, [&](std::size_t blk) {
    const int lo = static_cast<int>(blk) * n / blocks;
    const int hi = static_cast<int>(blk + 1) * n / blocks;
    Eigen::MatrixXd diff(d, n);
    Eigen::VectorXd dist(n), prob(n), coeff(n);
    for (int ii = lo; ii < hi; ++ii) {
      const int i = anchors[ii];
      for (int jj = 0; jj < n; ++jj) {
        diff.col(jj) = (Xt.col(anchors[jj]) - Xt.col(i)).cwiseAbs();
        dist[jj] = diff.col(jj).dot(v);
      }
      double m = std::numeric_limits<double>::infinity();
      for (int jj = 0; jj < n; ++jj)
        if (jj != ii) m = std::min(m, dist[jj]);
      double z = 0.0;
      for (int jj = 0; jj < n; ++jj) {
        prob[jj] = jj == ii ? 0.0 : std::exp(-(dist[jj] - m));
        z += prob[jj];
      }
      prob /= z;
      double p_i = 0.0;
      for (int jj = 0; jj < n; ++jj)
        if (jj != ii && y[anchors[jj]] == y[i]) p_i += prob[jj];
      block_obj[blk] += p_i;
      if (with_grad) {
        for (int jj = 0; jj < n; ++jj)
          coeff[jj] = prob[jj] * (p_i - (y[anchors[jj]] == y[i] ? 1.0 : 0.0));
        coeff[ii] = 0.0;
        block_grad[blk].noalias() += diff * coeff;
      }
    }
  });

  Evaluation ev;
  for (int b = 0; b < blocks; ++b) ev.objective += block_obj[b];
  ev.objective /= n;
  if (with_grad) {
    ev.grad_v = Eigen::VectorXd::Zero(d);
    for (int b = 0; b < blocks; ++b) ev.grad_v += block_grad[b];
    ev.grad_v /= n;
  }
  return ev;
}

}  // namespace

NcaWeights fit_nca(const Eigen::MatrixXd& X, const std::vector<int>& y,
                   const NcaConfig& config) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n != static_cast<int>(y.size()))
    throw ShapeError("fit_nca: " + std::to_string(n) + " rows vs " +
                     std::to_string(y.size()) + " labels");
  if (n < 2) throw StatsError("fit_nca: need at least 2 samples");
  if (!X.allFinite()) throw StatsError("fit_nca: non-finite features");
  if (std::set<int>(y.begin(), y.end()).size() < 2)
    throw StatsError("fit_nca: need at least 2 classes");
  if (config.max_iters < 1) throw ConfigError("fit_nca: max_iters must be >= 1");
  if (config.learning_rate <= 0.0) throw ConfigError("fit_nca: learning_rate must be > 0");

  const double lambda = config.lambda >= 0.0 ? config.lambda : 1.0 / n;
  const Eigen::MatrixXd Xt = X.transpose();  // samples as contiguous columns
  const bool batched = config.batch_size > 0 && n > config.batch_size;
  Rng rng = derive_rng(config.seed, {0x4ECA});
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  auto draw_batch = [&]() {
    if (!batched) return all;
    std::vector<int> ids = all;
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(config.batch_size);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  Eigen::VectorXd w = Eigen::VectorXd::Ones(d);
  auto penalized = [&](double raw, const Eigen::VectorXd& ww) {
    return raw - lambda * ww.squaredNorm();
  };

  NcaWeights result;
  result.config = config;
  result.config.lambda = lambda;

  std::vector<int> batch = draw_batch();
  Evaluation ev = evaluate(Xt, y, batch, w.array().square().matrix(), true);
  double objective = penalized(ev.objective, w);
  result.objective_trace.push_back(objective);

  double lr = config.learning_rate;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    Eigen::VectorXd grad_w =
        2.0 * (w.array() * ev.grad_v.array() - lambda * w.array()).matrix();
    const double scale = grad_w.cwiseAbs().maxCoeff();
    if (scale <= 0.0) break;
    grad_w /= scale;  // sup-norm step control; lr is the step in weight units
    bool accepted = false;
    Eigen::VectorXd w_next;
    double obj_next = 0.0;
    for (int halving = 0; halving < 10; ++halving) {
      w_next = w + lr * grad_w;
      const Evaluation trial =
          evaluate(Xt, y, batch, w_next.array().square().matrix(), false);
      obj_next = penalized(trial.objective, w_next);
      if (obj_next > objective) {
        accepted = true;
        lr *= 1.1;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    const double gain = obj_next - objective;
    w = w_next;
    objective = obj_next;
    result.objective_trace.push_back(objective);
    if (iter + 1 >= config.max_iters) break;
    if (batched) {
      batch = draw_batch();
      ev = evaluate(Xt, y, batch, w.array().square().matrix(), true);
      objective = penalized(ev.objective, w);
    } else {
      if (gain < 1e-10 * std::max(1.0, std::abs(objective))) break;
      ev = evaluate(Xt, y, batch, w.array().square().matrix(), true);
    }
  }

  result.weights = w.array().square();
  return result;
}

std::vector<int> rank_features(const NcaWeights& weights) {
  std::vector<int> order(weights.weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (weights.weights[a] != weights.weights[b])
      return weights.weights[a] > weights.weights[b];
    return a < b;
  });
  return order;
}

}  // namespace afop
