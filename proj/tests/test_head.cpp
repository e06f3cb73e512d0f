#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "afop/head.hpp"
#include "afop/rng.hpp"
#include "support/fd_check.hpp"

#include <chrono>
#include <cmath>
#include <random>

using namespace afop;

namespace {

Episode random_episode(int n_way, int k_shot, int n_query, int dim, Rng& rng) {
  std::normal_distribution<double> gauss;
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.support.resize(n_way * k_shot, dim);
  for (int r = 0; r < ep.support.rows(); ++r)
    for (int c = 0; c < dim; ++c) ep.support(r, c) = gauss(rng);
  ep.query.resize(n_query, dim);
  ep.query_slots.resize(n_query);
  for (int r = 0; r < n_query; ++r) {
    for (int c = 0; c < dim; ++c) ep.query(r, c) = gauss(rng);
    ep.query_slots[r] = static_cast<int>(rng() % n_way);
  }
  for (int s = 0; s < n_way; ++s) ep.class_map.emplace_back(s, Material::Resin);
  return ep;
}

AdaptedHead random_head(int n_way, int dim, double alpha, double lambda, Rng& rng) {
  std::normal_distribution<double> gauss;
  AdaptedHead head;
  head.alpha = alpha;
  head.config.lambda = lambda;
  head.W.resize(n_way, dim);
  for (int r = 0; r < n_way; ++r)
    for (int c = 0; c < dim; ++c) head.W(r, c) = gauss(rng);
  head.b.resize(n_way);
  for (int r = 0; r < n_way; ++r) head.b[r] = 0.3 * gauss(rng);
  return head;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  // 20 random 5-way-5-shot 8-dimensional episodes, rel error < 1e-4 at h=1e-5.
  Rng rng = derive_rng(1234, {1});
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Episode ep = random_episode(5, 5, 0, 8, rng);
    AdaptedHead head = random_head(5, 8, 10.0, 0.10, rng);
    const auto rep = support::fd_gradient_check(head, ep);
    worst = std::max(worst, rep.max_rel_err);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(worst < 1e-4);
  CHECK(secs < 10.0);
}

TEST_CASE("gradients stay correct at lambda 0 and with varied temperature") {
  Rng rng = derive_rng(1234, {2});
  for (double alpha : {1.0, 16.0})
    for (double lambda : {0.0, 0.25}) {
      Episode ep = random_episode(4, 3, 0, 6, rng);
      AdaptedHead head = random_head(4, 6, alpha, lambda, rng);
      const auto rep = support::fd_gradient_check(head, ep);
      CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("a saturated episode has vanishing gradients") {
  // Orthogonal one-hot classes with a huge temperature: p(correct) ~ 1,
  // cross-entropy and entropy both flatten out.
  Episode ep;
  ep.n_way = 3;
  ep.k_shot = 1;
  ep.support = Eigen::MatrixXd::Identity(3, 3);
  for (int s = 0; s < 3; ++s) ep.class_map.emplace_back(s, Material::Resin);
  AdaptedHead head;
  head.alpha = 200.0;
  head.config.lambda = 0.10;
  head.W = Eigen::MatrixXd::Identity(3, 3);
  head.b = Eigen::VectorXd::Zero(3);
  CHECK(support_loss(head, ep) < 1e-6);
  const HeadGradients g = loss_gradients(head, ep);
  CHECK(g.dW.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(g.db.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("softmax shift invariance makes bias gradients sum to zero") {
  // Adding a constant to every logit leaves the posterior unchanged, so the
  // loss is flat along b -> b + c 1 and the db components must cancel.
  Rng rng = derive_rng(99, {3});
  for (int trial = 0; trial < 10; ++trial) {
    Episode ep = random_episode(5, 4, 0, 7, rng);
    AdaptedHead head = random_head(5, 7, 10.0, 0.10, rng);
    const HeadGradients g = loss_gradients(head, ep);
    CHECK(std::abs(g.db.sum()) < 1e-10);
  }
}

TEST_CASE("prototypes with one shot are the support rows themselves") {
  Rng rng = derive_rng(5, {4});
  Episode ep = random_episode(6, 1, 0, 9, rng);
  const Eigen::MatrixXd proto = compute_prototypes(ep);
  CHECK((proto - ep.support).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prototypes average the class slots") {
  Episode ep;
  ep.n_way = 2;
  ep.k_shot = 2;
  ep.support.resize(4, 2);
  ep.support << 1, 0, 3, 2, 10, 4, 0, 0;
  for (int s = 0; s < 2; ++s) ep.class_map.emplace_back(s, Material::Resin);
  const Eigen::MatrixXd proto = compute_prototypes(ep);
  CHECK(proto(0, 0) == doctest::Approx(2.0));
  CHECK(proto(0, 1) == doctest::Approx(1.0));
  CHECK(proto(1, 0) == doctest::Approx(5.0));
  CHECK(proto(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("logits are invariant to positive row rescaling") {
  Rng rng = derive_rng(5, {5});
  Episode ep = random_episode(5, 3, 0, 8, rng);
  AdaptedHead head = random_head(5, 8, 10.0, 0.10, rng);
  AdaptedHead scaled = head;
  for (int r = 0; r < scaled.W.rows(); ++r) scaled.W.row(r) *= 1.0 + 7.0 * (r % 3);
  const Eigen::VectorXd x = ep.support.row(2);
  const Eigen::VectorXd z0 = head_logits(x, head);
  const Eigen::VectorXd z1 = head_logits(x, scaled);
  CHECK((z0 - z1).cwiseAbs().maxCoeff() <= 1e-12);
  // Cosine bounds the logit range.
  CHECK((z0 - head.b).cwiseAbs().maxCoeff() <= head.alpha * (1.0 + 1e-12));
}

TEST_CASE("posteriors sum to one and survive extreme logits") {
  Eigen::VectorXd z(4);
  z << 1000.0, -1000.0, 999.5, 0.0;
  const Eigen::VectorXd p = posteriors(z);
  CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(std::isfinite(p.maxCoeff()));
}

TEST_CASE("uniform posteriors give loss ln N at lambda 0") {
  // Identical support rows for every class make all cosines equal.
  const int n_way = 5;
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = 2;
  ep.support = Eigen::MatrixXd::Ones(n_way * 2, 3);
  for (int s = 0; s < n_way; ++s) ep.class_map.emplace_back(s, Material::Resin);
  AdaptedHead head;
  head.alpha = 10.0;
  head.config.lambda = 0.0;
  head.W = Eigen::MatrixXd::Ones(n_way, 3);
  head.b = Eigen::VectorXd::Zero(n_way);
  CHECK(support_loss(head, ep) == doctest::Approx(std::log(double(n_way))).epsilon(1e-12));
}

TEST_CASE("zero-norm inputs and rows produce cosine zero, never NaN") {
  AdaptedHead head;
  head.alpha = 10.0;
  head.W = Eigen::MatrixXd::Zero(2, 3);
  head.W.row(0) << 1, 0, 0;
  head.b = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd z = head_logits(Eigen::VectorXd::Zero(3), head);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  Eigen::VectorXd x(3);
  x << 1, 1, 1;
  const Eigen::VectorXd z2 = head_logits(x, head);
  CHECK(z2[1] == 0.0);  // zero row
  CHECK(std::isfinite(z2[0]));
}

TEST_CASE("adaptation reduces the support loss") {
  Rng rng = derive_rng(31, {6});
  int improved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Episode ep = random_episode(5, 5, 0, 12, rng);
    AdaptConfig cfg;
    cfg.steps = 50;
    const AdaptedHead head = adapt(ep, 10.0, cfg);
    REQUIRE(head.loss_trace.size() == 51);
    if (head.loss_trace.back() < head.loss_trace.front()) ++improved;
  }
  CHECK(improved >= 95);
}

TEST_CASE("zero adaptation steps reproduce the prototype initialization exactly") {
  Rng rng = derive_rng(31, {7});
  Episode ep = random_episode(5, 5, 10, 12, rng);
  AdaptConfig cfg;
  cfg.steps = 0;
  const AdaptedHead head = adapt(ep, 10.0, cfg);
  const Eigen::MatrixXd expect = normalized_rows(compute_prototypes(ep));
  CHECK((head.W - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(head.b.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(head.loss_trace.size() == 1);

  // And the queries classify identically under the two code paths.
  const QueryResult via_adapt = classify_queries(ep, head);
  AdaptedHead manual;
  manual.alpha = 10.0;
  manual.W = expect;
  manual.b = Eigen::VectorXd::Zero(5);
  const QueryResult direct = classify_queries(ep, manual);
  CHECK((via_adapt.predictions - direct.predictions).cwiseAbs().maxCoeff() == 0);
  CHECK(via_adapt.accuracy == direct.accuracy);
}

TEST_CASE("adaptation never reads the queries") {
  Rng rng = derive_rng(31, {8});
  Episode ep = random_episode(4, 3, 8, 6, rng);
  Episode scrambled = ep;
  scrambled.query.setConstant(1e6);
  AdaptConfig cfg;
  cfg.steps = 25;
  const AdaptedHead a = adapt(ep, 10.0, cfg);
  const AdaptedHead b = adapt(scrambled, 10.0, cfg);
  CHECK((a.W - b.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.b - b.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("an easy episode classifies its queries correctly after adaptation") {
  // Three well-separated clusters; queries are noisy copies of the supports.
  Rng rng = derive_rng(77, {9});
  std::normal_distribution<double> gauss;
  const int dim = 10;
  Episode ep;
  ep.n_way = 3;
  ep.k_shot = 5;
  ep.support.resize(15, dim);
  ep.query.resize(9, dim);
  ep.query_slots.resize(9);
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(3, dim);
  centers(0, 0) = 4.0;
  centers(1, 1) = 4.0;
  centers(2, 2) = 4.0;
  for (int s = 0; s < 3; ++s) {
    ep.class_map.emplace_back(s, Material::Resin);
    for (int k = 0; k < 5; ++k)
      for (int c = 0; c < dim; ++c)
        ep.support(s * 5 + k, c) = centers(s, c) + 0.2 * gauss(rng);
    for (int q = 0; q < 3; ++q) {
      ep.query_slots[s * 3 + q] = s;
      for (int c = 0; c < dim; ++c)
        ep.query(s * 3 + q, c) = centers(s, c) + 0.2 * gauss(rng);
    }
  }
  const AdaptedHead head = adapt(ep, 10.0, AdaptConfig{});
  const QueryResult r = classify_queries(ep, head);
  CHECK(r.accuracy == doctest::Approx(1.0));
}

TEST_CASE("empty slots and missing queries throw") {
  Episode ep;
  ep.n_way = 2;
  ep.k_shot = 0;
  ep.support.resize(0, 3);
  CHECK_THROWS_AS(compute_prototypes(ep), EpisodeError);

  Rng rng = derive_rng(1, {10});
  Episode ok = random_episode(2, 2, 0, 3, rng);
  const AdaptedHead head = adapt(ok, 10.0, AdaptConfig{.steps = 0});
  CHECK_THROWS_AS(classify_queries(ok, head), EpisodeError);
}
