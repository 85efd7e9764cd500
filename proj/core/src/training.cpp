#include "dqmor/training.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

#include <json.hpp>

#include "dqmor/errors.hpp"

namespace dqmor {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrixXd>;
using RowMap = Eigen::Map<RowMatrixXd>;

// Flat view of one parameter (or gradient) block; the fixed block order
// defines both the Adam update order and the finite-difference sweep.
struct BlockView {
  std::string name;
  double* data;
  long size;
};

std::vector<BlockView> param_views(FactoredJointDensity& model) {
  return {{"lambda_logits", model.lambda_logits.data(),
           model.lambda_logits.size()},
          {"V", model.v.data(), model.v.size()}};
}

std::vector<BlockView> param_views(QmrGradient& grad) {
  return {{"lambda_logits", grad.d_lambda_logits.data(),
           grad.d_lambda_logits.size()},
          {"V", grad.d_v.data(), grad.d_v.size()}};
}

std::vector<BlockView> param_views(ClassDensityEnsemble& model) {
  std::vector<BlockView> views;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    ClassDensity& cls = model.classes[c];
    const std::string prefix = "class" + std::to_string(c) + ".";
    views.push_back({prefix + "lambda_logits", cls.lambda_logits.data(),
                     cls.lambda_logits.size()});
    views.push_back({prefix + "V", cls.v.data(), cls.v.size()});
  }
  return views;
}

std::vector<BlockView> param_views(DmkdcGradient& grad) {
  std::vector<BlockView> views;
  for (std::size_t c = 0; c < grad.size(); ++c) {
    const std::string prefix = "class" + std::to_string(c) + ".";
    views.push_back({prefix + "lambda_logits", grad[c].d_lambda_logits.data(),
                     grad[c].d_lambda_logits.size()});
    views.push_back({prefix + "V", grad[c].d_v.data(), grad[c].d_v.size()});
  }
  return views;
}

long total_size(const std::vector<BlockView>& views) {
  long total = 0;
  for (const BlockView& b : views) total += b.size;
  return total;
}

// dL/dlogits from dL/dlambda through the softmax Jacobian.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& d_lambda) {
  const double inner = d_lambda.dot(lambda);
  return (lambda.array() * (d_lambda.array() - inner)).matrix();
}

// dL/drow from dL/dvhat for vhat = row / |row|: project out the radial
// component and scale by 1/|row|.
void row_normalization_backward(const Eigen::VectorXd& unit_row,
                                double row_norm, Eigen::VectorXd& d_vhat) {
  const double radial = d_vhat.dot(unit_row);
  d_vhat = (d_vhat - radial * unit_row) / row_norm;
}

struct AdamOptimizer {
  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;

  AdamOptimizer(double lr, const std::vector<BlockView>& params)
      : learning_rate(lr) {
    for (const BlockView& b : params) {
      first_moment.push_back(Eigen::VectorXd::Zero(b.size));
      second_moment.push_back(Eigen::VectorXd::Zero(b.size));
    }
  }

  void step(std::vector<BlockView>& params,
            const std::vector<BlockView>& grads) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t b = 0; b < params.size(); ++b) {
      Eigen::Map<Eigen::VectorXd> p(params[b].data, params[b].size);
      Eigen::Map<const Eigen::VectorXd> g(grads[b].data, grads[b].size);
      Eigen::VectorXd& m = first_moment[b];
      Eigen::VectorXd& v = second_moment[b];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseAbs2();
      p.array() -=
          learning_rate * (m.array() / bc1) /
          ((v.array() / bc2).sqrt() + eps);
    }
  }
};

#ifndef NDEBUG
void debug_check_constraints(const FactoredJointDensity& model) {
  const double simplex_sum = model.eigenvalues().sum();
  assert(std::abs(simplex_sum - 1.0) < 1e-9);
  for (int k = 0; k < model.num_components(); ++k) {
    const double n = model.v.row(k).norm();
    assert(std::isfinite(n) && n > 0.0);
  }
}

void debug_check_constraints(const ClassDensityEnsemble& model) {
  for (const ClassDensity& cls : model.classes) {
    assert(std::abs(softmax(cls.lambda_logits).sum() - 1.0) < 1e-9);
    for (long k = 0; k < cls.v.rows(); ++k) {
      const double n = cls.v.row(k).norm();
      assert(std::isfinite(n) && n > 0.0);
    }
  }
}
#endif

void check_batch_against(const Batch& batch, int state_dim, int num_grades,
                         const char* who) {
  if (batch.size() == 0) {
    throw InvalidArgumentError(std::string(who) + ": empty batch");
  }
  if (batch.states.rows() != state_dim ||
      batch.states.cols() != batch.size()) {
    throw InvalidArgumentError(std::string(who) +
                               ": batch states have wrong shape");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= num_grades) {
      throw InvalidArgumentError(std::string(who) + ": label " +
                                 std::to_string(y) + " outside [0, " +
                                 std::to_string(num_grades) + ")");
    }
  }
}

}  // namespace

double qmr_loss_gradient(const FactoredJointDensity& model, const Batch& batch,
                         double alpha, QmrGradient& grad) {
  const int num_components = model.num_components();
  const int state_dim = model.state_dim;
  const int num_grades = model.num_grades;
  check_batch_against(batch, state_dim, num_grades, "qmr_loss_gradient");

  const Eigen::VectorXd lambda = model.eigenvalues();
  Eigen::VectorXd row_norms(num_components);
  for (int k = 0; k < num_components; ++k) {
    row_norms[k] = model.v.row(k).norm();
    if (!(row_norms[k] > 0.0)) {
      throw InvalidArgumentError("qmr_loss_gradient: eigenvector row " +
                                 std::to_string(k) + " has zero norm");
    }
  }

  grad.d_lambda_logits = Eigen::VectorXd::Zero(num_components);
  grad.d_v = RowMatrixXd::Zero(num_components,
                               static_cast<long>(state_dim) * num_grades);
  Eigen::VectorXd d_lambda = Eigen::VectorXd::Zero(num_components);

  RowMatrixXd projections(num_components, num_grades);  // uhat per component
  double loss_sum = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const Eigen::VectorXd psi = batch.states.col(i);
    const int y = batch.labels[i];

    Eigen::VectorXd scores = Eigen::VectorXd::Zero(num_grades);
    for (int k = 0; k < num_components; ++k) {
      ConstRowMap block(model.v.row(k).data(), state_dim, num_grades);
      projections.row(k) =
          (block.transpose() * psi).transpose() / row_norms[k];
      scores +=
          lambda[k] * projections.row(k).cwiseAbs2().transpose();
    }
    const double score_mass = scores.sum();
    if (!std::isfinite(score_mass)) {
      // Unlike inference, training must not mask numerical failure as a
      // degenerate state; the train loop turns this into
      // TrainingDivergedError.
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (!(score_mass > kDegenerateTrace)) {
      // Uniform fallback carries no usable gradient; count its loss only.
      const Posterior p = uniform_posterior(num_grades, true);
      const double err = y - expected_grade(p);
      loss_sum += err * err + alpha * posterior_variance(p);
      continue;
    }

    const Eigen::VectorXd probs = scores / score_mass;
    double mean = 0.0;
    for (int r = 0; r < num_grades; ++r) mean += r * probs[r];
    double variance = 0.0;
    for (int r = 0; r < num_grades; ++r) {
      const double d = r - mean;
      variance += probs[r] * d * d;
    }
    const double err = y - mean;
    loss_sum += err * err + alpha * variance;

    // dL/dp_r; the mean's dependence inside the variance term cancels
    // because sum_r p_r (r - mean) = 0.
    Eigen::VectorXd d_probs(num_grades);
    for (int r = 0; r < num_grades; ++r) {
      const double d = r - mean;
      d_probs[r] = 2.0 * (mean - y) * r + alpha * d * d;
    }
    const double inner = d_probs.dot(probs);
    const Eigen::VectorXd d_scores =
        (d_probs.array() - inner).matrix() / score_mass;

    for (int k = 0; k < num_components; ++k) {
      const Eigen::VectorXd uhat = projections.row(k).transpose();
      d_lambda[k] += d_scores.dot(uhat.cwiseAbs2());
      const Eigen::VectorXd d_uhat =
          2.0 * lambda[k] * d_scores.cwiseProduct(uhat);
      RowMap d_block(grad.d_v.row(k).data(), state_dim, num_grades);
      d_block.noalias() += psi * d_uhat.transpose();
    }
  }

  const double inv_batch = 1.0 / batch.size();
  d_lambda *= inv_batch;
  grad.d_v *= inv_batch;

  // Accumulation above is with respect to vhat; push through the row
  // normalization, then the softmax.
  for (int k = 0; k < num_components; ++k) {
    const Eigen::VectorXd unit_row =
        model.v.row(k).transpose() / row_norms[k];
    Eigen::VectorXd d_row = grad.d_v.row(k).transpose();
    row_normalization_backward(unit_row, row_norms[k], d_row);
    grad.d_v.row(k) = d_row.transpose();
  }
  grad.d_lambda_logits = softmax_backward(lambda, d_lambda);
  return loss_sum * inv_batch;
}

double dmkdc_loss_gradient(const ClassDensityEnsemble& model,
                           const Batch& batch, DmkdcGradient& grad) {
  const int num_grades = model.num_grades();
  const int num_components = model.num_components();
  const int state_dim = model.state_dim;
  check_batch_against(batch, state_dim, num_grades, "dmkdc_loss_gradient");

  std::vector<Eigen::VectorXd> lambdas(num_grades);
  std::vector<Eigen::VectorXd> row_norms(num_grades);
  for (int c = 0; c < num_grades; ++c) {
    const ClassDensity& cls = model.classes[c];
    lambdas[c] = softmax(cls.lambda_logits);
    row_norms[c].resize(num_components);
    for (int k = 0; k < num_components; ++k) {
      row_norms[c][k] = cls.v.row(k).norm();
      if (!(row_norms[c][k] > 0.0)) {
        throw InvalidArgumentError(
            "dmkdc_loss_gradient: eigenvector row " + std::to_string(k) +
            " of class " + std::to_string(c) + " has zero norm");
      }
    }
  }

  grad.assign(num_grades, DensityGradient{});
  std::vector<Eigen::VectorXd> d_lambda(num_grades);
  for (int c = 0; c < num_grades; ++c) {
    grad[c].d_lambda_logits = Eigen::VectorXd::Zero(num_components);
    grad[c].d_v = RowMatrixXd::Zero(num_components, state_dim);
    d_lambda[c] = Eigen::VectorXd::Zero(num_components);
  }

  RowMatrixXd projections(num_grades, num_components);  // ahat per class
  double loss_sum = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const Eigen::VectorXd psi = batch.states.col(i);
    const int y = batch.labels[i];

    Eigen::VectorXd scores(num_grades);
    for (int c = 0; c < num_grades; ++c) {
      projections.row(c) =
          (model.classes[c].v * psi).cwiseQuotient(row_norms[c]).transpose();
      scores[c] =
          lambdas[c].dot(projections.row(c).cwiseAbs2().transpose());
    }
    const double score_mass = scores.sum();
    if (!std::isfinite(score_mass)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (!(score_mass > kDegenerateTrace)) {
      loss_sum += -std::log(1.0 / num_grades + kCrossEntropyEps);
      continue;
    }
    const Eigen::VectorXd probs = scores / score_mass;
    loss_sum += -std::log(probs[y] + kCrossEntropyEps);

    // dL/dp is supported on the true class only.
    const double d_p_y = -1.0 / (probs[y] + kCrossEntropyEps);
    const double inner = d_p_y * probs[y];
    for (int c = 0; c < num_grades; ++c) {
      const double d_score =
          ((c == y ? d_p_y : 0.0) - inner) / score_mass;
      const Eigen::VectorXd ahat = projections.row(c).transpose();
      d_lambda[c] += d_score * ahat.cwiseAbs2();
      const Eigen::VectorXd d_ahat =
          2.0 * d_score * lambdas[c].cwiseProduct(ahat);
      grad[c].d_v.noalias() += d_ahat * psi.transpose();
    }
  }

  const double inv_batch = 1.0 / batch.size();
  for (int c = 0; c < num_grades; ++c) {
    d_lambda[c] *= inv_batch;
    grad[c].d_v *= inv_batch;
    const ClassDensity& cls = model.classes[c];
    for (int k = 0; k < num_components; ++k) {
      const Eigen::VectorXd unit_row =
          cls.v.row(k).transpose() / row_norms[c][k];
      Eigen::VectorXd d_row = grad[c].d_v.row(k).transpose();
      row_normalization_backward(unit_row, row_norms[c][k], d_row);
      grad[c].d_v.row(k) = d_row.transpose();
    }
    grad[c].d_lambda_logits = softmax_backward(lambdas[c], d_lambda[c]);
  }
  return loss_sum * inv_batch;
}

namespace {

template <class Model, class Gradient, class LossGradFn, class LossFn>
GradCheckReport run_gradient_check(const Model& model, const Batch& batch,
                                   LossGradFn&& loss_grad, LossFn&& loss_fn,
                                   double h, double perturbation) {
  if (!(h > 0.0)) {
    throw InvalidArgumentError("gradient_check: step size must be positive");
  }
  Model probe = model;
  std::vector<BlockView> params = param_views(probe);
  const long num_params = total_size(params);
  if (num_params > kGradCheckMaxParams) {
    throw TooLargeError("gradient_check: " + std::to_string(num_params) +
                        " parameters exceed the guard of " +
                        std::to_string(kGradCheckMaxParams));
  }

  Gradient analytic;
  loss_grad(probe, batch, analytic);
  std::vector<BlockView> grads = param_views(analytic);

  GradCheckReport report;
  report.step = h;
  for (std::size_t b = 0; b < params.size(); ++b) {
    double block_max = 0.0;
    for (long i = 0; i < params[b].size; ++i) {
      const double saved = params[b].data[i];
      params[b].data[i] = saved + h;
      const double loss_plus = loss_fn(probe, batch);
      params[b].data[i] = saved - h;
      const double loss_minus = loss_fn(probe, batch);
      params[b].data[i] = saved;
      const double finite_diff = (loss_plus - loss_minus) / (2.0 * h);
      const double analytic_value = grads[b].data[i] + perturbation;
      const double rel =
          std::abs(analytic_value - finite_diff) /
          std::max({std::abs(analytic_value), std::abs(finite_diff), 1e-8});
      block_max = std::max(block_max, rel);
    }
    report.block_errors.emplace_back(params[b].name, block_max);
    report.max_rel_error = std::max(report.max_rel_error, block_max);
  }
  return report;
}

}  // namespace

GradCheckReport gradient_check(const FactoredJointDensity& model,
                               const Batch& batch, double alpha, double h,
                               double perturbation) {
  return run_gradient_check<FactoredJointDensity, QmrGradient>(
      model, batch,
      [alpha](const FactoredJointDensity& m, const Batch& b, QmrGradient& g) {
        return qmr_loss_gradient(m, b, alpha, g);
      },
      [alpha](const FactoredJointDensity& m, const Batch& b) {
        return qmr_loss(m, b, alpha);
      },
      h, perturbation);
}

GradCheckReport gradient_check(const ClassDensityEnsemble& model,
                               const Batch& batch, double h,
                               double perturbation) {
  return run_gradient_check<ClassDensityEnsemble, DmkdcGradient>(
      model, batch,
      [](const ClassDensityEnsemble& m, const Batch& b, DmkdcGradient& g) {
        return dmkdc_loss_gradient(m, b, g);
      },
      [](const ClassDensityEnsemble& m, const Batch& b) {
        return cross_entropy_loss(m, b);
      },
      h, perturbation);
}

namespace {

Eigen::MatrixXd encode_dataset(const FeatureDataset& dataset,
                               const RffEncoder& encoder) {
  Eigen::MatrixXd states(encoder.rff_dim(), dataset.size());
  for (int i = 0; i < dataset.size(); ++i) {
    states.col(i) = encoder.encode(dataset.records[i].features).values;
  }
  return states;
}

void check_training_inputs(const FeatureDataset& dataset,
                           const RffEncoder& encoder,
                           const QmrConfig& config) {
  if (dataset.size() == 0) {
    throw InvalidArgumentError("train: empty dataset");
  }
  if (!dataset.labeled()) {
    throw InvalidArgumentError("train: dataset has unlabeled records");
  }
  if (dataset.feature_dim != encoder.input_dim()) {
    throw InvalidArgumentError(
        "train: dataset feature_dim " + std::to_string(dataset.feature_dim) +
        " does not match encoder input_dim " +
        std::to_string(encoder.input_dim()));
  }
  if (config.rff_dim != encoder.rff_dim()) {
    throw InvalidArgumentError("train: config rff_dim " +
                               std::to_string(config.rff_dim) +
                               " does not match encoder rff_dim " +
                               std::to_string(encoder.rff_dim()));
  }
  if (config.num_grades < 1 || config.num_components < 1 ||
      config.epochs < 1 || config.batch_size < 1 ||
      !(config.learning_rate > 0.0) || config.alpha < 0.0) {
    throw InvalidArgumentError("train: invalid hyperparameters");
  }
  for (const PatchRecord& rec : dataset.records) {
    if (rec.label < 0 || rec.label >= config.num_grades) {
      throw InvalidArgumentError("train: label " + std::to_string(rec.label) +
                                 " outside [0, " +
                                 std::to_string(config.num_grades) + ")");
    }
  }
}

template <class Model, class Gradient, class LossGradFn>
std::pair<Model, TrainReport> run_minibatch_adam(
    Model model, LossGradFn&& loss_grad, const Eigen::MatrixXd& states,
    const std::vector<int>& labels, const QmrConfig& config,
    std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  const int num_samples = static_cast<int>(labels.size());
  const int batch_size = std::min(config.batch_size, num_samples);

  std::vector<BlockView> params = param_views(model);
  AdamOptimizer optimizer(config.learning_rate, params);

  Model best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  TrainReport report;
  report.seed = config.seed;
  report.epochs_run = config.epochs;

  std::vector<int> order(num_samples);
  std::iota(order.begin(), order.end(), 0);
  Gradient grad;
  Batch batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1));
    shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    int batch_index = 0;
    for (int begin = 0; begin < num_samples; begin += batch_size, ++batch_index) {
      const int count = std::min(batch_size, num_samples - begin);
      batch.states.resize(states.rows(), count);
      batch.labels.resize(count);
      for (int j = 0; j < count; ++j) {
        batch.states.col(j) = states.col(order[begin + j]);
        batch.labels[j] = labels[order[begin + j]];
      }

      const double loss = loss_grad(model, batch, grad);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(
            "training diverged: non-finite loss at epoch=" +
            std::to_string(epoch) + " batch=" + std::to_string(batch_index));
      }
      epoch_loss_sum += loss * count;

      std::vector<BlockView> grads = param_views(grad);
      optimizer.step(params, grads);
#ifndef NDEBUG
      debug_check_constraints(model);
#endif
    }

    const double epoch_loss = epoch_loss_sum / num_samples;
    report.epoch_losses.push_back(epoch_loss);
    if (progress != nullptr) {
      (*progress) << "epoch=" << epoch << " loss=" << epoch_loss << "\n";
    }
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = model;
    }
  }

  report.final_loss = best_loss;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return {std::move(best), std::move(report)};
}

}  // namespace

QmrTrainResult train_qmr(const FeatureDataset& dataset,
                         const RffEncoder& encoder, const QmrConfig& config,
                         FactoredJointDensity initial,
                         std::ostream* progress) {
  check_training_inputs(dataset, encoder, config);
  if (initial.state_dim != config.rff_dim ||
      initial.num_grades != config.num_grades) {
    throw InvalidArgumentError("train_qmr: initial model shape mismatch");
  }
  const Eigen::MatrixXd states = encode_dataset(dataset, encoder);
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const PatchRecord& rec : dataset.records) labels.push_back(rec.label);

  const double alpha = config.alpha;
  auto [model, report] =
      run_minibatch_adam<FactoredJointDensity, QmrGradient>(
          std::move(initial),
          [alpha](const FactoredJointDensity& m, const Batch& b,
                  QmrGradient& g) { return qmr_loss_gradient(m, b, alpha, g); },
          states, labels, config, progress);
  return {std::move(model), std::move(report)};
}

QmrTrainResult train_qmr(const FeatureDataset& dataset,
                         const RffEncoder& encoder, const QmrConfig& config,
                         InitScheme init, std::ostream* progress) {
  check_training_inputs(dataset, encoder, config);
  Rng init_rng(derive_seed(config.seed, 0));
  FactoredJointDensity initial;
  if (init == InitScheme::kRandom) {
    initial = random_joint_density(config.rff_dim, config.num_grades,
                                   config.num_components, init_rng);
  } else {
    // Rows seeded from K random training samples: encode(x) (x) onehot(y).
    initial.state_dim = config.rff_dim;
    initial.num_grades = config.num_grades;
    initial.lambda_logits = Eigen::VectorXd::Zero(config.num_components);
    initial.v = RowMatrixXd::Zero(
        config.num_components,
        static_cast<long>(config.rff_dim) * config.num_grades);
    for (int k = 0; k < config.num_components; ++k) {
      const auto idx = static_cast<int>(
          init_rng.bounded(static_cast<std::uint64_t>(dataset.size())));
      const StateVector psi = encoder.encode(dataset.records[idx].features);
      const int y = dataset.records[idx].label;
      for (int d = 0; d < config.rff_dim; ++d) {
        initial.v(k, static_cast<long>(d) * config.num_grades + y) =
            psi.values[d];
      }
    }
  }
  return train_qmr(dataset, encoder, config, std::move(initial), progress);
}

DmkdcTrainResult train_dmkdc(const FeatureDataset& dataset,
                             const RffEncoder& encoder,
                             const QmrConfig& config,
                             ClassDensityEnsemble initial,
                             std::ostream* progress) {
  check_training_inputs(dataset, encoder, config);
  if (initial.state_dim != config.rff_dim ||
      initial.num_grades() != config.num_grades) {
    throw InvalidArgumentError("train_dmkdc: initial model shape mismatch");
  }
  const Eigen::MatrixXd states = encode_dataset(dataset, encoder);
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const PatchRecord& rec : dataset.records) labels.push_back(rec.label);

  auto [model, report] =
      run_minibatch_adam<ClassDensityEnsemble, DmkdcGradient>(
          std::move(initial),
          [](const ClassDensityEnsemble& m, const Batch& b, DmkdcGradient& g) {
            return dmkdc_loss_gradient(m, b, g);
          },
          states, labels, config, progress);
  return {std::move(model), std::move(report)};
}

DmkdcTrainResult train_dmkdc(const FeatureDataset& dataset,
                             const RffEncoder& encoder,
                             const QmrConfig& config, InitScheme init,
                             std::ostream* progress) {
  check_training_inputs(dataset, encoder, config);
  Rng init_rng(derive_seed(config.seed, 0));
  ClassDensityEnsemble initial;
  if (init == InitScheme::kRandom) {
    initial = random_class_ensemble(config.rff_dim, config.num_grades,
                                    config.num_components, init_rng);
  } else {
    // Rows seeded from encoded samples of the matching class; classes with
    // no samples fall back to random rows.
    std::vector<std::vector<int>> by_class(config.num_grades);
    for (int i = 0; i < dataset.size(); ++i) {
      by_class[dataset.records[i].label].push_back(i);
    }
    initial.state_dim = config.rff_dim;
    initial.classes.resize(config.num_grades);
    for (int c = 0; c < config.num_grades; ++c) {
      ClassDensity& cls = initial.classes[c];
      cls.lambda_logits = Eigen::VectorXd::Zero(config.num_components);
      cls.v.resize(config.num_components, config.rff_dim);
      for (int k = 0; k < config.num_components; ++k) {
        if (by_class[c].empty()) {
          for (int j = 0; j < config.rff_dim; ++j) {
            cls.v(k, j) = init_rng.gaussian();
          }
          cls.v.row(k) /= cls.v.row(k).norm();
        } else {
          const int idx = by_class[c][static_cast<std::size_t>(
              init_rng.bounded(by_class[c].size()))];
          cls.v.row(k) =
              encoder.encode(dataset.records[idx].features).values.transpose();
        }
      }
    }
  }
  return train_dmkdc(dataset, encoder, config, std::move(initial), progress);
}

TrainOutcome train(ModelKind kind, const FeatureDataset& dataset,
                   const RffEncoder& encoder, const QmrConfig& config,
                   InitScheme init, std::ostream* progress) {
  if (kind == ModelKind::kQmr) {
    QmrTrainResult result = train_qmr(dataset, encoder, config, init, progress);
    Checkpoint checkpoint{kCheckpointVersion, ModelKind::kQmr, encoder,
                          std::move(result.model), std::nullopt, config};
    return {std::move(checkpoint), std::move(result.report)};
  }
  DmkdcTrainResult result = train_dmkdc(dataset, encoder, config, init, progress);
  Checkpoint checkpoint{kCheckpointVersion, ModelKind::kDmkdc, encoder,
                        std::nullopt, std::move(result.model), config};
  return {std::move(checkpoint), std::move(result.report)};
}

InitScheme init_scheme_from_string(const std::string& name) {
  if (name == "random") return InitScheme::kRandom;
  if (name == "data") return InitScheme::kData;
  throw InvalidArgumentError("unknown init scheme '" + name +
                             "' (expected random|data)");
}

std::string train_report_json(const TrainReport& report) {
  nlohmann::json j;
  j["epoch_losses"] = report.epoch_losses;
  j["final_loss"] = report.final_loss;
  j["epochs_run"] = report.epochs_run;
  j["seed"] = report.seed;
  j["wall_seconds"] = report.wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace dqmor
