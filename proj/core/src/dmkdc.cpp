#include "dqmor/dmkdc.hpp"

#include <cmath>
#include <string>

#include "dqmor/errors.hpp"

namespace dqmor {

namespace {

void check_model(const ClassDensityEnsemble& model) {
  if (model.state_dim < 1 || model.classes.empty()) {
    throw InvalidArgumentError("ClassDensityEnsemble: empty model");
  }
  const int k = model.num_components();
  for (const ClassDensity& cls : model.classes) {
    if (cls.lambda_logits.size() != k || cls.v.rows() != k ||
        cls.v.cols() != model.state_dim) {
      throw InvalidArgumentError(
          "ClassDensityEnsemble: inconsistent class parameter shapes");
    }
  }
}

}  // namespace

ClassDensityEnsemble random_class_ensemble(int state_dim, int num_grades,
                                           int num_components, Rng& rng) {
  if (state_dim < 1 || num_grades < 1 || num_components < 1) {
    throw InvalidArgumentError(
        "random_class_ensemble: sizes must be positive");
  }
  ClassDensityEnsemble model;
  model.state_dim = state_dim;
  model.classes.resize(num_grades);
  for (ClassDensity& cls : model.classes) {
    cls.lambda_logits = Eigen::VectorXd::Zero(num_components);
    cls.v.resize(num_components, state_dim);
    for (int k = 0; k < num_components; ++k) {
      for (int j = 0; j < state_dim; ++j) cls.v(k, j) = rng.gaussian();
      cls.v.row(k) /= cls.v.row(k).norm();
    }
  }
  return model;
}

Eigen::VectorXd class_scores(const ClassDensityEnsemble& model,
                             const Eigen::VectorXd& psi) {
  check_model(model);
  if (psi.size() != model.state_dim) {
    throw InvalidArgumentError("class_scores: state length " +
                               std::to_string(psi.size()) +
                               " does not match state_dim " +
                               std::to_string(model.state_dim));
  }
  Eigen::VectorXd scores(model.num_grades());
  for (int c = 0; c < model.num_grades(); ++c) {
    const ClassDensity& cls = model.classes[c];
    const Eigen::VectorXd lambda = softmax(cls.lambda_logits);
    const Eigen::VectorXd raw_dots = cls.v * psi;  // K
    double score = 0.0;
    for (int k = 0; k < raw_dots.size(); ++k) {
      const double row_norm = cls.v.row(k).norm();
      if (!(row_norm > 0.0)) {
        throw InvalidArgumentError("class_scores: eigenvector row " +
                                   std::to_string(k) + " of class " +
                                   std::to_string(c) + " has zero norm");
      }
      const double projection = raw_dots[k] / row_norm;
      score += lambda[k] * projection * projection;
    }
    scores[c] = score;
  }
  return scores;
}

Posterior dmkdc_posterior(const ClassDensityEnsemble& model,
                          const Eigen::VectorXd& psi) {
  const Eigen::VectorXd scores = class_scores(model, psi);
  const double total = scores.sum();
  if (!(total > kDegenerateTrace)) {
    return uniform_posterior(model.num_grades(), /*degenerate=*/true);
  }
  return Posterior{scores / total};
}

Posterior dmkdc_posterior(const ClassDensityEnsemble& model,
                          const StateVector& psi) {
  return dmkdc_posterior(model, psi.values);
}

double cross_entropy_loss(const ClassDensityEnsemble& model,
                          const Batch& batch) {
  check_model(model);
  if (batch.size() == 0) {
    throw InvalidArgumentError("cross_entropy_loss: empty batch");
  }
  if (batch.states.cols() != batch.size() ||
      batch.states.rows() != model.state_dim) {
    throw InvalidArgumentError(
        "cross_entropy_loss: batch states have wrong shape");
  }
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const int y = batch.labels[i];
    if (y < 0 || y >= model.num_grades()) {
      throw InvalidArgumentError("cross_entropy_loss: label " +
                                 std::to_string(y) + " outside [0, " +
                                 std::to_string(model.num_grades()) + ")");
    }
    const Posterior p =
        dmkdc_posterior(model, Eigen::VectorXd(batch.states.col(i)));
    total += -std::log(p.probs[y] + kCrossEntropyEps);
  }
  return total / batch.size();
}

}  // namespace dqmor
