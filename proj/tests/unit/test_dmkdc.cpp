#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dqmor/dmkdc.hpp"
#include "dqmor/errors.hpp"
#include "dqmor/posterior.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rng.hpp"

using dqmor::Batch;
using dqmor::ClassDensityEnsemble;
using dqmor::Posterior;
using dqmor::Rng;

namespace {

Eigen::VectorXd random_state(int dim, Rng& rng) {
  Eigen::VectorXd psi(dim);
  for (int d = 0; d < dim; ++d) psi[d] = rng.gaussian();
  return psi / psi.norm();
}

ClassDensityEnsemble random_model(int dim, int grades, int components,
                                  Rng& rng) {
  ClassDensityEnsemble model =
      dqmor::random_class_ensemble(dim, grades, components, rng);
  for (auto& cls : model.classes) {
    for (int k = 0; k < components; ++k) {
      cls.lambda_logits[k] = rng.uniform(-1.5, 1.5);
    }
  }
  return model;
}

// Independent oracle: materialize each class density rho_c = sum_k
// lambda_k vhat_k vhat_k^T and score psi^T rho_c psi.
Eigen::VectorXd oracle_scores(const ClassDensityEnsemble& model,
                              const Eigen::VectorXd& psi) {
  Eigen::VectorXd scores(static_cast<long>(model.classes.size()));
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    const auto& cls = model.classes[c];
    const Eigen::VectorXd lambda = dqmor::softmax(cls.lambda_logits);
    Eigen::MatrixXd rho =
        Eigen::MatrixXd::Zero(model.state_dim, model.state_dim);
    for (long k = 0; k < cls.v.rows(); ++k) {
      const Eigen::VectorXd unit =
          cls.v.row(k).transpose() / cls.v.row(k).norm();
      rho += lambda[k] * unit * unit.transpose();
    }
    scores[static_cast<long>(c)] = psi.dot(rho * psi);
  }
  return scores;
}

}  // namespace

TEST_CASE("dmkdc: class scores match the materialized quadratic form") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 2 + static_cast<int>(rng.bounded(12));
    const int grades = 2 + static_cast<int>(rng.bounded(5));
    const int components = 1 + static_cast<int>(rng.bounded(6));
    const ClassDensityEnsemble model =
        random_model(dim, grades, components, rng);
    const Eigen::VectorXd psi = random_state(dim, rng);
    const Eigen::VectorXd fast = dqmor::class_scores(model, psi);
    const Eigen::VectorXd slow = oracle_scores(model, psi);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("dmkdc: posterior is a normalized simplex") {
  Rng rng(32);
  const ClassDensityEnsemble model = random_model(8, 5, 4, rng);
  for (int i = 0; i < 50; ++i) {
    const Posterior p = dqmor::dmkdc_posterior(model, random_state(8, rng));
    REQUIRE(p.num_grades() == 5);
    CHECK(std::abs(p.probs.sum() - 1.0) <= 1e-9);
    CHECK(p.probs.minCoeff() >= 0.0);
    CHECK_FALSE(p.degenerate);
  }
}

TEST_CASE("dmkdc: orthogonal state yields the uniform fallback") {
  ClassDensityEnsemble model;
  model.state_dim = 2;
  model.classes.resize(2);
  for (auto& cls : model.classes) {
    cls.lambda_logits = Eigen::VectorXd::Zero(1);
    cls.v = dqmor::RowMatrixXd::Zero(1, 2);
    cls.v(0, 1) = 1.0;
  }
  Eigen::VectorXd psi(2);
  psi << 1.0, 0.0;
  const Posterior p = dqmor::dmkdc_posterior(model, psi);
  CHECK(p.degenerate);
  CHECK(p.probs[0] == doctest::Approx(0.5));
}

TEST_CASE("dmkdc: cross entropy matches a direct recomputation") {
  Rng rng(33);
  const int dim = 6, grades = 4;
  const ClassDensityEnsemble model = random_model(dim, grades, 3, rng);
  Batch batch;
  const int count = 7;
  batch.states.resize(dim, count);
  batch.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    batch.states.col(i) = random_state(dim, rng);
    batch.labels[i] = static_cast<int>(rng.bounded(grades));
  }

  double expected = 0.0;
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd scores =
        oracle_scores(model, batch.states.col(i).eval());
    const Eigen::VectorXd probs = scores / scores.sum();
    expected += -std::log(probs[batch.labels[i]] + dqmor::kCrossEntropyEps);
  }
  expected /= count;

  CHECK(dqmor::cross_entropy_loss(model, batch) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("dmkdc: validation") {
  Rng rng(34);
  ClassDensityEnsemble model = random_model(4, 3, 2, rng);

  Eigen::VectorXd wrong(5);
  wrong.setZero();
  CHECK_THROWS_AS((void)dqmor::dmkdc_posterior(model, wrong),
                  dqmor::InvalidArgumentError);

  // Mixed component counts across classes are malformed.
  model.classes[1].lambda_logits = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(
      (void)dqmor::dmkdc_posterior(model, random_state(4, rng)),
      dqmor::InvalidArgumentError);

  ClassDensityEnsemble zero_row = random_model(4, 3, 2, rng);
  zero_row.classes[0].v.row(0).setZero();
  CHECK_THROWS_AS(
      (void)dqmor::dmkdc_posterior(zero_row, random_state(4, rng)),
      dqmor::InvalidArgumentError);

  Batch bad;
  bad.states = random_state(4, rng);
  bad.labels = {9};
  const ClassDensityEnsemble ok = random_model(4, 3, 2, rng);
  CHECK_THROWS_AS((void)dqmor::cross_entropy_loss(ok, bad),
                  dqmor::InvalidArgumentError);
}

TEST_CASE("dmkdc: random_class_ensemble invariants") {
  Rng rng(35);
  const ClassDensityEnsemble model =
      dqmor::random_class_ensemble(5, 3, 4, rng);
  REQUIRE(model.num_grades() == 3);
  REQUIRE(model.num_components() == 4);
  for (const auto& cls : model.classes) {
    CHECK(cls.lambda_logits == Eigen::VectorXd::Zero(4));
    for (int k = 0; k < 4; ++k) {
      CHECK(cls.v.row(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
