#include "dqmor/qmr.hpp"

#include <cmath>
#include <string>

#include "dqmor/errors.hpp"

namespace dqmor {

namespace {

void check_model(const FactoredJointDensity& model) {
  const long joint_dim =
      static_cast<long>(model.state_dim) * model.num_grades;
  if (model.state_dim < 1 || model.num_grades < 1 ||
      model.lambda_logits.size() < 1) {
    throw InvalidArgumentError("FactoredJointDensity: empty model");
  }
  if (model.v.rows() != model.lambda_logits.size() ||
      model.v.cols() != joint_dim) {
    throw InvalidArgumentError(
        "FactoredJointDensity: V must be K x (D*N); got " +
        std::to_string(model.v.rows()) + " x " +
        std::to_string(model.v.cols()));
  }
}

void check_state(const FactoredJointDensity& model,
                 const Eigen::VectorXd& psi) {
  if (psi.size() != model.state_dim) {
    throw InvalidArgumentError("posterior: state length " +
                               std::to_string(psi.size()) +
                               " does not match state_dim " +
                               std::to_string(model.state_dim));
  }
}

using ConstRowMap = Eigen::Map<const RowMatrixXd>;

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd FactoredJointDensity::eigenvalues() const {
  return softmax(lambda_logits);
}

Batch make_batch(const std::vector<std::pair<StateVector, int>>& samples) {
  if (samples.empty()) {
    throw InvalidArgumentError("make_batch: empty sample list");
  }
  const int dim = samples.front().first.dim();
  Batch batch;
  batch.states.resize(dim, static_cast<long>(samples.size()));
  batch.labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].first.dim() != dim) {
      throw InvalidArgumentError("make_batch: mixed state dimensions");
    }
    batch.states.col(static_cast<long>(i)) = samples[i].first.values;
    batch.labels.push_back(samples[i].second);
  }
  return batch;
}

FactoredJointDensity random_joint_density(int state_dim, int num_grades,
                                          int num_components, Rng& rng) {
  if (state_dim < 1 || num_grades < 1 || num_components < 1) {
    throw InvalidArgumentError("random_joint_density: sizes must be positive");
  }
  FactoredJointDensity model;
  model.state_dim = state_dim;
  model.num_grades = num_grades;
  model.lambda_logits = Eigen::VectorXd::Zero(num_components);
  model.v.resize(num_components,
                 static_cast<long>(state_dim) * num_grades);
  for (int k = 0; k < num_components; ++k) {
    for (long j = 0; j < model.v.cols(); ++j) model.v(k, j) = rng.gaussian();
    model.v.row(k) /= model.v.row(k).norm();
  }
  return model;
}

Posterior posterior(const FactoredJointDensity& model,
                    const Eigen::VectorXd& psi) {
  check_model(model);
  check_state(model, psi);
  const int num_grades = model.num_grades;
  const int state_dim = model.state_dim;
  const Eigen::VectorXd lambda = model.eigenvalues();

  Eigen::VectorXd scores = Eigen::VectorXd::Zero(num_grades);
  for (int k = 0; k < model.num_components(); ++k) {
    const double row_norm = model.v.row(k).norm();
    if (!(row_norm > 0.0)) {
      throw InvalidArgumentError("posterior: eigenvector row " +
                                 std::to_string(k) + " has zero norm");
    }
    ConstRowMap block(model.v.row(k).data(), state_dim, num_grades);
    const Eigen::VectorXd u = block.transpose() * psi / row_norm;
    scores += lambda[k] * u.cwiseAbs2();
  }
  const double total = scores.sum();
  if (!(total > kDegenerateTrace)) {
    return uniform_posterior(num_grades, /*degenerate=*/true);
  }
  return Posterior{scores / total};
}

Posterior posterior(const FactoredJointDensity& model,
                    const StateVector& psi) {
  return posterior(model, psi.values);
}

Eigen::MatrixXd materialize_joint_density(const FactoredJointDensity& model) {
  check_model(model);
  const long joint_dim =
      static_cast<long>(model.state_dim) * model.num_grades;
  if (joint_dim > kOracleMaxJointDim) {
    throw TooLargeError("materialize_joint_density: joint dimension " +
                        std::to_string(joint_dim) + " exceeds the guard of " +
                        std::to_string(kOracleMaxJointDim));
  }
  const Eigen::VectorXd lambda = model.eigenvalues();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(joint_dim, joint_dim);
  for (int k = 0; k < model.num_components(); ++k) {
    const Eigen::VectorXd unit =
        model.v.row(k).transpose() / model.v.row(k).norm();
    rho += lambda[k] * unit * unit.transpose();
  }
  return rho;
}

Posterior brute_force_posterior(const FactoredJointDensity& model,
                                const Eigen::VectorXd& psi) {
  check_state(model, psi);
  const Eigen::MatrixXd rho = materialize_joint_density(model);  // guards size
  const int state_dim = model.state_dim;
  const int num_grades = model.num_grades;
  const long joint_dim = rho.rows();

  // Prediction operator |psi><psi| (x) Id on the joint space; flat index of
  // basis element (d, r) is d*N + r.
  Eigen::MatrixXd projector = Eigen::MatrixXd::Zero(joint_dim, joint_dim);
  for (int d = 0; d < state_dim; ++d) {
    for (int dp = 0; dp < state_dim; ++dp) {
      for (int r = 0; r < num_grades; ++r) {
        projector(static_cast<long>(d) * num_grades + r,
                  static_cast<long>(dp) * num_grades + r) = psi[d] * psi[dp];
      }
    }
  }

  const Eigen::MatrixXd collapsed = projector * rho * projector;
  const double trace = collapsed.trace();
  if (!(trace > kDegenerateTrace)) {
    return uniform_posterior(num_grades, /*degenerate=*/true);
  }

  // Partial trace over the input subsystem, then the label-space diagonal.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(num_grades);
  for (int r = 0; r < num_grades; ++r) {
    for (int d = 0; d < state_dim; ++d) {
      const long i = static_cast<long>(d) * num_grades + r;
      diag[r] += collapsed(i, i);
    }
  }
  return Posterior{diag / trace};
}

double qmr_loss(const FactoredJointDensity& model, const Batch& batch,
                double alpha) {
  check_model(model);
  if (batch.size() == 0) {
    throw InvalidArgumentError("qmr_loss: empty batch");
  }
  if (batch.states.cols() != batch.size() ||
      batch.states.rows() != model.state_dim) {
    throw InvalidArgumentError("qmr_loss: batch states have wrong shape");
  }
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const int y = batch.labels[i];
    if (y < 0 || y >= model.num_grades) {
      throw InvalidArgumentError("qmr_loss: label " + std::to_string(y) +
                                 " outside [0, " +
                                 std::to_string(model.num_grades) + ")");
    }
    const Posterior p = posterior(model, Eigen::VectorXd(batch.states.col(i)));
    const double mean = expected_grade(p);
    const double err = y - mean;
    total += err * err + alpha * posterior_variance(p);
  }
  return total / batch.size();
}

}  // namespace dqmor
