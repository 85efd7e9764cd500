#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dqmor/dataio.hpp"
#include "dqmor/dmkdc.hpp"
#include "dqmor/qmr.hpp"

namespace dqmor {

/// gradient_check refuses models with more unconstrained parameters than
/// this (central differences visit every one of them twice).
inline constexpr int kGradCheckMaxParams = 20000;

struct TrainReport {
  std::vector<double> epoch_losses;
  double final_loss = 0.0;  // loss of the retained (best) epoch
  int epochs_run = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

std::string train_report_json(const TrainReport& report);

enum class InitScheme {
  kRandom,  // unit-normalized standard normal rows, uniform eigenvalues
  kData,    // rows seeded from encoded training samples
};

InitScheme init_scheme_from_string(const std::string& name);

/// Gradient of a factored density's parameters, in parameter layout.
struct DensityGradient {
  Eigen::VectorXd d_lambda_logits;
  RowMatrixXd d_v;
};

using QmrGradient = DensityGradient;
using DmkdcGradient = std::vector<DensityGradient>;  // one block per class

/// Exact gradient of qmr_loss with the softmax and row normalization
/// differentiated through.  Returns the batch loss.
double qmr_loss_gradient(const FactoredJointDensity& model, const Batch& batch,
                         double alpha, QmrGradient& grad);

/// Exact gradient of cross_entropy_loss; returns the batch loss.
double dmkdc_loss_gradient(const ClassDensityEnsemble& model,
                           const Batch& batch, DmkdcGradient& grad);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double step = 0.0;
  /// One entry per parameter block ("lambda_logits", "V", or per-class
  /// "class<i>.___"), holding that block's max relative error.
  std::vector<std::pair<std::string, double>> block_errors;
};

/// Compares the analytic gradient against central finite differences
/// (L(p + h e_i) - L(p - h e_i)) / 2h over every parameter; relative error
/// is |a - f| / max(|a|, |f|, 1e-8).  `perturbation` is a fault-injection
/// knob (added to every analytic entry) used to prove the check can fail.
GradCheckReport gradient_check(const FactoredJointDensity& model,
                               const Batch& batch, double alpha,
                               double h = 1e-5, double perturbation = 0.0);
GradCheckReport gradient_check(const ClassDensityEnsemble& model,
                               const Batch& batch, double h = 1e-5,
                               double perturbation = 0.0);

struct QmrTrainResult {
  FactoredJointDensity model;
  TrainReport report;
};

struct DmkdcTrainResult {
  ClassDensityEnsemble model;
  TrainReport report;
};

/// Minibatch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on lambda_logits and V.
/// Deterministic given (dataset, config, encoder): initialization uses
/// stream 0 of config.seed, epoch e shuffles with stream e + 1, and batch
/// gradients accumulate in sample-index order.  Each epoch writes one
/// `epoch=<i> loss=<float>` line to `progress` when given.  The model with
/// the best epoch loss is the one returned.  Throws TrainingDivergedError
/// naming the epoch and batch if a loss turns non-finite.
QmrTrainResult train_qmr(const FeatureDataset& dataset,
                         const RffEncoder& encoder, const QmrConfig& config,
                         InitScheme init = InitScheme::kRandom,
                         std::ostream* progress = nullptr);
DmkdcTrainResult train_dmkdc(const FeatureDataset& dataset,
                             const RffEncoder& encoder,
                             const QmrConfig& config,
                             InitScheme init = InitScheme::kRandom,
                             std::ostream* progress = nullptr);

/// Warm-start overloads; initial parameters replace the built-in init.
QmrTrainResult train_qmr(const FeatureDataset& dataset,
                         const RffEncoder& encoder, const QmrConfig& config,
                         FactoredJointDensity initial,
                         std::ostream* progress = nullptr);
DmkdcTrainResult train_dmkdc(const FeatureDataset& dataset,
                             const RffEncoder& encoder,
                             const QmrConfig& config,
                             ClassDensityEnsemble initial,
                             std::ostream* progress = nullptr);

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Kind-dispatching convenience used by the CLI.
TrainOutcome train(ModelKind kind, const FeatureDataset& dataset,
                   const RffEncoder& encoder, const QmrConfig& config,
                   InitScheme init = InitScheme::kRandom,
                   std::ostream* progress = nullptr);

}  // namespace dqmor
