#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "dqmor/dataio.hpp"
#include "dqmor/errors.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rff.hpp"
#include "dqmor/rng.hpp"
#include "dqmor/training.hpp"

using dqmor::Batch;
using dqmor::ClassDensityEnsemble;
using dqmor::FactoredJointDensity;
using dqmor::FeatureDataset;
using dqmor::GradCheckReport;
using dqmor::QmrConfig;
using dqmor::RffEncoder;
using dqmor::Rng;

namespace {

Batch random_batch(int dim, int grades, int count, Rng& rng) {
  Batch batch;
  batch.states.resize(dim, count);
  batch.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd psi(dim);
    for (int d = 0; d < dim; ++d) psi[d] = rng.gaussian();
    batch.states.col(i) = psi / psi.norm();
    batch.labels[i] = static_cast<int>(rng.bounded(grades));
  }
  return batch;
}

QmrConfig small_config(int rff_dim, int grades) {
  QmrConfig config;
  config.rff_dim = rff_dim;
  config.num_grades = grades;
  config.num_components = 4;
  config.gamma = 0.25;
  config.alpha = 0.4;
  config.learning_rate = 0.05;
  config.epochs = 8;
  config.batch_size = 16;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("training: qmr analytic gradient matches finite differences") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 3 + static_cast<int>(rng.bounded(5));
    const int grades = 2 + static_cast<int>(rng.bounded(4));
    const int components = 1 + static_cast<int>(rng.bounded(4));
    FactoredJointDensity model =
        dqmor::random_joint_density(dim, grades, components, rng);
    for (int k = 0; k < components; ++k) {
      model.lambda_logits[k] = rng.uniform(-1.0, 1.0);
    }
    const Batch batch = random_batch(dim, grades, 6, rng);
    const GradCheckReport report =
        dqmor::gradient_check(model, batch, 0.4);
    CHECK(report.max_rel_error <= 1e-4);
    REQUIRE(report.block_errors.size() == 2);
    CHECK(report.block_errors[0].first == "lambda_logits");
    CHECK(report.block_errors[1].first == "V");
  }
}

TEST_CASE("training: dmkdc analytic gradient matches finite differences") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 3 + static_cast<int>(rng.bounded(5));
    const int grades = 2 + static_cast<int>(rng.bounded(4));
    const int components = 1 + static_cast<int>(rng.bounded(3));
    ClassDensityEnsemble model =
        dqmor::random_class_ensemble(dim, grades, components, rng);
    for (auto& cls : model.classes) {
      for (int k = 0; k < components; ++k) {
        cls.lambda_logits[k] = rng.uniform(-1.0, 1.0);
      }
    }
    const Batch batch = random_batch(dim, grades, 6, rng);
    const GradCheckReport report = dqmor::gradient_check(model, batch);
    CHECK(report.max_rel_error <= 1e-4);
    CHECK(report.block_errors.size() == 2 * static_cast<std::size_t>(grades));
  }
}

TEST_CASE("training: a corrupted gradient fails the check") {
  // Negative control: the checker must be able to say no.
  Rng rng(43);
  const FactoredJointDensity model = dqmor::random_joint_density(4, 3, 2, rng);
  const Batch batch = random_batch(4, 3, 4, rng);
  const GradCheckReport clean = dqmor::gradient_check(model, batch, 0.4);
  CHECK(clean.max_rel_error <= 1e-4);
  const GradCheckReport dirty =
      dqmor::gradient_check(model, batch, 0.4, 1e-5, /*perturbation=*/0.05);
  CHECK(dirty.max_rel_error > 1e-4);
}

TEST_CASE("training: gradient_check guards") {
  Rng rng(44);
  const Batch batch = random_batch(4, 3, 2, rng);
  const FactoredJointDensity small =
      dqmor::random_joint_density(4, 3, 2, rng);
  CHECK_THROWS_AS(
      (void)dqmor::gradient_check(small, batch, 0.4, /*h=*/0.0),
      dqmor::InvalidArgumentError);

  // 64 * (128 * 3) = 24640 parameters > 20000.
  const FactoredJointDensity huge =
      dqmor::random_joint_density(128, 3, 64, rng);
  const Batch big_batch = random_batch(128, 3, 2, rng);
  CHECK_THROWS_AS((void)dqmor::gradient_check(huge, big_batch, 0.4),
                  dqmor::TooLargeError);
}

TEST_CASE("training: qmr training is bitwise deterministic") {
  const FeatureDataset data =
      dqmor::synth_generate(30, 3, 4, 3, 0.3, 11);
  const QmrConfig config = small_config(16, 3);
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, config.seed);

  const auto first = dqmor::train_qmr(data, encoder, config);
  const auto second = dqmor::train_qmr(data, encoder, config);
  CHECK(first.model.lambda_logits == second.model.lambda_logits);
  CHECK(first.model.v == second.model.v);
  REQUIRE(first.report.epoch_losses.size() ==
          second.report.epoch_losses.size());
  for (std::size_t e = 0; e < first.report.epoch_losses.size(); ++e) {
    CHECK(first.report.epoch_losses[e] == second.report.epoch_losses[e]);
  }

  QmrConfig other = config;
  other.seed = 8;
  const auto third = dqmor::train_qmr(data, encoder, other);
  CHECK(first.model.v != third.model.v);
}

TEST_CASE("training: loss decreases and the best epoch is retained") {
  const FeatureDataset data =
      dqmor::synth_generate(40, 3, 4, 3, 0.2, 13);
  QmrConfig config = small_config(16, 3);
  config.epochs = 12;
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 3);

  std::ostringstream progress;
  const auto result = dqmor::train_qmr(data, encoder, config,
                                       dqmor::InitScheme::kRandom, &progress);
  const auto& losses = result.report.epoch_losses;
  REQUIRE(static_cast<int>(losses.size()) == config.epochs);
  CHECK(losses.back() < losses.front());
  CHECK(result.report.final_loss ==
        *std::min_element(losses.begin(), losses.end()));
  CHECK(result.report.epochs_run == config.epochs);
  CHECK(result.report.wall_seconds > 0.0);

  // One progress line per epoch.
  const std::string text = progress.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == config.epochs);
  CHECK(text.rfind("epoch=0 loss=", 0) == 0);
}

TEST_CASE("training: dmkdc training runs and improves") {
  const FeatureDataset data =
      dqmor::synth_generate(40, 3, 4, 3, 0.2, 17);
  QmrConfig config = small_config(16, 3);
  config.learning_rate = 5e-3;
  config.epochs = 12;
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 5);
  const auto result = dqmor::train_dmkdc(data, encoder, config);
  CHECK(result.report.epoch_losses.back() <
        result.report.epoch_losses.front());
  CHECK(result.model.num_grades() == 3);
}

TEST_CASE("training: data init seeds rows from encoded samples") {
  const FeatureDataset data = dqmor::synth_generate(20, 2, 4, 3, 0.2, 19);
  QmrConfig config = small_config(16, 3);
  config.epochs = 2;
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 5);
  const auto random_run =
      dqmor::train_qmr(data, encoder, config, dqmor::InitScheme::kRandom);
  const auto data_run =
      dqmor::train_qmr(data, encoder, config, dqmor::InitScheme::kData);
  CHECK(random_run.model.v != data_run.model.v);
  const auto data_run2 =
      dqmor::train_qmr(data, encoder, config, dqmor::InitScheme::kData);
  CHECK(data_run.model.v == data_run2.model.v);

  const auto dm_data =
      dqmor::train_dmkdc(data, encoder, config, dqmor::InitScheme::kData);
  CHECK(dm_data.model.state_dim == config.rff_dim);
}

TEST_CASE("training: non-finite parameters raise TrainingDivergedError") {
  const FeatureDataset data = dqmor::synth_generate(10, 2, 4, 3, 0.2, 23);
  QmrConfig config = small_config(8, 3);
  config.epochs = 1;
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 5);
  Rng rng(1);
  FactoredJointDensity initial = dqmor::random_joint_density(
      config.rff_dim, config.num_grades, config.num_components, rng);
  initial.v(0, 0) = std::numeric_limits<double>::infinity();
  try {
    (void)dqmor::train_qmr(data, encoder, config, initial);
    FAIL("expected TrainingDivergedError");
  } catch (const dqmor::TrainingDivergedError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch=0") != std::string::npos);
    CHECK(what.find("batch=0") != std::string::npos);
  }
}

TEST_CASE("training: input validation") {
  const FeatureDataset data = dqmor::synth_generate(10, 2, 4, 3, 0.2, 29);
  QmrConfig config = small_config(8, 3);
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 5);

  FeatureDataset empty;
  empty.feature_dim = 4;
  empty.num_grades = 3;
  CHECK_THROWS_AS((void)dqmor::train_qmr(empty, encoder, config),
                  dqmor::InvalidArgumentError);

  FeatureDataset unlabeled = data;
  unlabeled.records[0].label = dqmor::kUnlabeled;
  CHECK_THROWS_AS((void)dqmor::train_qmr(unlabeled, encoder, config),
                  dqmor::InvalidArgumentError);

  QmrConfig mismatched = config;
  mismatched.rff_dim = 32;  // encoder produces 8-dim states
  CHECK_THROWS_AS((void)dqmor::train_qmr(data, encoder, mismatched),
                  dqmor::InvalidArgumentError);

  QmrConfig bad_lr = config;
  bad_lr.learning_rate = 0.0;
  CHECK_THROWS_AS((void)dqmor::train_qmr(data, encoder, bad_lr),
                  dqmor::InvalidArgumentError);

  const RffEncoder wrong_input =
      RffEncoder::sample(6, config.rff_dim, config.gamma, 5);
  CHECK_THROWS_AS((void)dqmor::train_qmr(data, wrong_input, config),
                  dqmor::InvalidArgumentError);
}

TEST_CASE("training: dispatcher builds matching checkpoints") {
  const FeatureDataset data = dqmor::synth_generate(10, 2, 4, 3, 0.2, 31);
  QmrConfig config = small_config(8, 3);
  config.epochs = 2;
  const RffEncoder encoder =
      RffEncoder::sample(4, config.rff_dim, config.gamma, 5);

  const auto qmr = dqmor::train(dqmor::ModelKind::kQmr, data, encoder, config);
  CHECK(qmr.checkpoint.kind == dqmor::ModelKind::kQmr);
  CHECK(qmr.checkpoint.qmr.has_value());
  CHECK_FALSE(qmr.checkpoint.dmkdc.has_value());
  CHECK(qmr.checkpoint.version == dqmor::kCheckpointVersion);

  const auto dm = dqmor::train(dqmor::ModelKind::kDmkdc, data, encoder, config);
  CHECK(dm.checkpoint.kind == dqmor::ModelKind::kDmkdc);
  CHECK(dm.checkpoint.dmkdc.has_value());
  CHECK_FALSE(dm.checkpoint.qmr.has_value());
}

TEST_CASE("training: report serializes to JSON") {
  dqmor::TrainReport report;
  report.epoch_losses = {1.5, 0.75};
  report.final_loss = 0.75;
  report.epochs_run = 2;
  report.seed = 9;
  report.wall_seconds = 0.125;
  const std::string json = dqmor::train_report_json(report);
  CHECK(json.find("\"epoch_losses\"") != std::string::npos);
  CHECK(json.find("0.75") != std::string::npos);
  CHECK(json.find("\"seed\": 9") != std::string::npos);
  CHECK(json.back() == '\n');
}

TEST_CASE("training: init_scheme_from_string") {
  CHECK(dqmor::init_scheme_from_string("random") ==
        dqmor::InitScheme::kRandom);
  CHECK(dqmor::init_scheme_from_string("data") == dqmor::InitScheme::kData);
  CHECK_THROWS_AS((void)dqmor::init_scheme_from_string("xavier"),
                  dqmor::InvalidArgumentError);
}
