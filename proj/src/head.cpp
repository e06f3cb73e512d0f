#include "afop/head.hpp"

#include <cmath>

namespace afop {

namespace {

void check_episode(const Episode& e) {
  if (e.n_way < 2) throw EpisodeError("episode needs at least 2 ways");
  if (e.k_shot < 1) throw EpisodeError("episode needs at least 1 shot");
  if (e.support.rows() != static_cast<long>(e.n_way) * e.k_shot)
    throw EpisodeError("support has " + std::to_string(e.support.rows()) +
                       " rows, expected " + std::to_string(e.n_way * e.k_shot));
}

Eigen::VectorXd normalized_or_zero(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  return norm > 0.0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(v.size());
}

/// Logits for one already-normalized input against the head.
Eigen::VectorXd logits_of_normalized(const Eigen::VectorXd& x_hat,
                                     const AdaptedHead& head) {
  Eigen::VectorXd z = head.b;
  for (int nn = 0; nn < head.W.rows(); ++nn) {
    const double norm = head.W.row(nn).norm();
    if (norm > 0.0) z[nn] += head.alpha * head.W.row(nn).dot(x_hat) / norm;
  }
  return z;
}

}  // namespace

Eigen::MatrixXd compute_prototypes(const Episode& episode) {
  check_episode(episode);
  Eigen::MatrixXd protos(episode.n_way, episode.dim());
  for (int nn = 0; nn < episode.n_way; ++nn)
    protos.row(nn) =
        episode.support.middleRows(static_cast<long>(nn) * episode.k_shot, episode.k_shot)
            .colwise()
            .mean();
  return protos;
}

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (int r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm > 0.0) out.row(r) /= norm;
    else out.row(r).setZero();
  }
  return out;
}

Eigen::VectorXd head_logits(const Eigen::VectorXd& x, const AdaptedHead& head) {
  if (x.size() != head.W.cols())
    throw ShapeError("head_logits: input dim " + std::to_string(x.size()) +
                     " vs head dim " + std::to_string(head.W.cols()));
  return logits_of_normalized(normalized_or_zero(x), head);
}

Eigen::VectorXd posteriors(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

int predict(const Eigen::VectorXd& x, const AdaptedHead& head) {
  const Eigen::VectorXd p = posteriors(head_logits(x, head));
  int best = 0;
  for (int nn = 1; nn < p.size(); ++nn)
    if (p[nn] > p[best]) best = nn;
  return best;
}

double support_loss(const AdaptedHead& head, const Episode& episode) {
  check_episode(episode);
  double total = 0.0;
  for (int r = 0; r < episode.support.rows(); ++r) {
    const Eigen::VectorXd p =
        posteriors(head_logits(episode.support.row(r).transpose(), head));
    const int label = episode.slot_of_support(r);
    double entropy = 0.0;
    for (int nn = 0; nn < p.size(); ++nn)
      if (p[nn] > 0.0) entropy -= p[nn] * std::log(p[nn]);
    total += -std::log(std::max(p[label], 1e-300)) + head.config.lambda * entropy;
  }
  return total / episode.support.rows();
}

HeadGradients loss_gradients(const AdaptedHead& head, const Episode& episode) {
  check_episode(episode);
  const int n_way = episode.n_way;
  const int dim = episode.dim();
  const int count = static_cast<int>(episode.support.rows());
  const double lambda = head.config.lambda;

  Eigen::MatrixXd w_hat(n_way, dim);
  Eigen::VectorXd w_norm(n_way);
  for (int nn = 0; nn < n_way; ++nn) {
    w_norm[nn] = head.W.row(nn).norm();
    if (w_norm[nn] > 0.0)
      w_hat.row(nn) = head.W.row(nn) / w_norm[nn];
    else
      w_hat.row(nn).setZero();
  }

  HeadGradients g;
  g.dW = Eigen::MatrixXd::Zero(n_way, dim);
  g.db = Eigen::VectorXd::Zero(n_way);
  Eigen::MatrixXd dW_hat = Eigen::MatrixXd::Zero(n_way, dim);

  for (int r = 0; r < count; ++r) {
    const Eigen::VectorXd x_hat = normalized_or_zero(episode.support.row(r).transpose());
    const Eigen::VectorXd p = posteriors(logits_of_normalized(x_hat, head));
    const int label = episode.slot_of_support(r);
    double entropy = 0.0;
    for (int nn = 0; nn < n_way; ++nn)
      if (p[nn] > 0.0) entropy -= p[nn] * std::log(p[nn]);
    Eigen::VectorXd dz = p;
    dz[label] -= 1.0;
    for (int nn = 0; nn < n_way; ++nn) {
      const double logp = p[nn] > 0.0 ? std::log(p[nn]) : 0.0;
      dz[nn] -= lambda * p[nn] * (logp + entropy);
    }
    g.db += dz;
    dW_hat.noalias() += head.alpha * dz * x_hat.transpose();
  }
  g.db /= count;
  dW_hat /= count;

  // through row normalization: dw = (I - w_hat w_hat^T) / |w| * dw_hat
  for (int nn = 0; nn < n_way; ++nn) {
    if (w_norm[nn] == 0.0) continue;  // cosine term is constant there
    const Eigen::RowVectorXd row = dW_hat.row(nn);
    g.dW.row(nn) = (row - row.dot(w_hat.row(nn)) * w_hat.row(nn)) / w_norm[nn];
  }
  return g;
}

AdaptedHead adapt(const Episode& episode, double alpha, const AdaptConfig& config) {
  check_episode(episode);
  if (config.steps < 0) throw ConfigError("adapt: steps must be >= 0");
  if (alpha <= 0.0) throw ConfigError("adapt: alpha must be positive");

  AdaptedHead head;
  head.alpha = alpha;
  head.config = config;
  head.W = normalized_rows(compute_prototypes(episode));
  head.b = Eigen::VectorXd::Zero(episode.n_way);
  head.loss_trace.reserve(config.steps + 1);
  head.loss_trace.push_back(support_loss(head, episode));

  Eigen::MatrixXd mW = Eigen::MatrixXd::Zero(head.W.rows(), head.W.cols());
  Eigen::MatrixXd vW = mW;
  Eigen::VectorXd mb = Eigen::VectorXd::Zero(head.b.size());
  Eigen::VectorXd vb = mb;

  for (int step = 1; step <= config.steps; ++step) {
    const HeadGradients g = loss_gradients(head, episode);
    const double c1 = 1.0 - std::pow(config.beta1, step);
    const double c2 = 1.0 - std::pow(config.beta2, step);
    mW = config.beta1 * mW + (1.0 - config.beta1) * g.dW;
    vW = config.beta2 * vW.array().matrix() +
         (1.0 - config.beta2) * g.dW.array().square().matrix();
    mb = config.beta1 * mb + (1.0 - config.beta1) * g.db;
    vb = config.beta2 * vb.array().matrix() +
         (1.0 - config.beta2) * g.db.array().square().matrix();
    head.W.array() -=
        config.learning_rate * (mW.array() / c1) / ((vW.array() / c2).sqrt() + config.epsilon);
    head.b.array() -=
        config.learning_rate * (mb.array() / c1) / ((vb.array() / c2).sqrt() + config.epsilon);
    head.loss_trace.push_back(support_loss(head, episode));
  }
  return head;
}

QueryResult classify_queries(const Episode& episode, const AdaptedHead& head) {
  if (episode.query.rows() == 0) throw EpisodeError("episode has no queries");
  if (episode.query.cols() != head.W.cols())
    throw ShapeError("classify_queries: query dim " + std::to_string(episode.query.cols()) +
                     " vs head dim " + std::to_string(head.W.cols()));
  if (episode.query_slots.size() != episode.query.rows())
    throw EpisodeError("query_slots size mismatch");

  QueryResult result;
  result.predictions.resize(episode.query.rows());
  int correct = 0;
  for (int q = 0; q < episode.query.rows(); ++q) {
    result.predictions[q] = predict(episode.query.row(q).transpose(), head);
    if (result.predictions[q] == episode.query_slots[q]) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / episode.query.rows();
  return result;
}

}  // namespace afop
