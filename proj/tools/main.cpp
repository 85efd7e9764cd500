// dqmor: train, evaluate, and run density-matrix ordinal regression models
// on precomputed feature vectors.
//
// Exit codes: 0 success, 1 runtime/domain error, 2 usage error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dqmor/aggregation.hpp"
#include "dqmor/dataio.hpp"
#include "dqmor/dmkdc.hpp"
#include "dqmor/errors.hpp"
#include "dqmor/evaluation.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rff.hpp"
#include "dqmor/rng.hpp"
#include "dqmor/training.hpp"

namespace {

constexpr double kGammaDefault = 0.0001220703125;  // 2^-13
constexpr double kQmrLrDefault = 6e-5;
constexpr double kDmkdcLrDefault = 5e-3;
constexpr double kGradCheckThreshold = 1e-4;

struct TrainOptions {
  std::string model = "qmr";
  std::string data;
  std::string out;
  std::string report;
  std::string init = "random";
  dqmor::QmrConfig config;
  CLI::Option* lr_option = nullptr;
};

struct EvaluateOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string variance_csv;
  int grade_base = 6;
};

struct PredictOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string method = "PV";
  std::string per_patch;
};

struct SynthOptions {
  int bags = 200;
  int patches = 8;
  int dim = 16;
  int grades = 5;
  double sigma = 0.3;
  std::uint64_t seed = 1;
  std::string out;
};

struct GradCheckOptions {
  std::string model = "qmr";
  int dim = 8;
  int grades = 5;
  int eig = 4;
  int batch = 8;
  double alpha = 0.4;
  double step = 1e-5;
  double perturb = 0.0;
  std::uint64_t seed = 3;
};

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw dqmor::Error("cannot open '" + path.string() + "' for writing");
  }
  file << text;
  if (!file) {
    throw dqmor::Error("failed writing '" + path.string() + "'");
  }
}

dqmor::Posterior patch_posterior(const dqmor::Checkpoint& checkpoint,
                                 const dqmor::StateVector& psi) {
  if (checkpoint.kind == dqmor::ModelKind::kQmr) {
    return dqmor::posterior(*checkpoint.qmr, psi);
  }
  return dqmor::dmkdc_posterior(*checkpoint.dmkdc, psi);
}

int model_num_grades(const dqmor::Checkpoint& checkpoint) {
  return checkpoint.kind == dqmor::ModelKind::kQmr
             ? checkpoint.qmr->num_grades
             : checkpoint.dmkdc->num_grades();
}

std::vector<dqmor::Posterior> dataset_posteriors(
    const dqmor::Checkpoint& checkpoint, const dqmor::FeatureDataset& data) {
  std::vector<dqmor::Posterior> posteriors;
  posteriors.reserve(data.records.size());
  for (const dqmor::PatchRecord& rec : data.records) {
    posteriors.push_back(
        patch_posterior(checkpoint, checkpoint.encoder.encode(rec.features)));
  }
  return posteriors;
}

int cmd_train(const TrainOptions& opts) {
  const dqmor::ModelKind kind = dqmor::model_kind_from_string(opts.model);
  dqmor::QmrConfig config = opts.config;
  if (opts.lr_option->count() == 0) {
    config.learning_rate = kind == dqmor::ModelKind::kQmr ? kQmrLrDefault
                                                          : kDmkdcLrDefault;
  }
  const dqmor::InitScheme init = dqmor::init_scheme_from_string(opts.init);

  const dqmor::FeatureDataset data =
      dqmor::load_csv(opts.data, config.num_grades);
  const dqmor::RffEncoder encoder = dqmor::RffEncoder::sample(
      data.feature_dim, config.rff_dim, config.gamma, config.seed);

  dqmor::TrainOutcome outcome =
      dqmor::train(kind, data, encoder, config, init, &std::cerr);
  dqmor::save_checkpoint(outcome.checkpoint, opts.out);

  const std::string report = dqmor::train_report_json(outcome.report);
  std::cout << report;
  if (!opts.report.empty()) {
    write_text_file(opts.report, report);
  }
  std::cerr << "wrote checkpoint to " << opts.out << "\n";
  return 0;
}

int cmd_evaluate(const EvaluateOptions& opts) {
  const dqmor::Checkpoint checkpoint = dqmor::load_checkpoint(opts.checkpoint);
  const int num_grades = model_num_grades(checkpoint);
  const dqmor::FeatureDataset data = dqmor::load_csv(opts.data, num_grades);
  if (data.size() == 0) {
    throw dqmor::InvalidArgumentError("evaluate: dataset is empty");
  }

  const std::vector<dqmor::Posterior> posteriors =
      dataset_posteriors(checkpoint, data);

  std::vector<int> patch_true, patch_pred;
  for (int i = 0; i < data.size(); ++i) {
    patch_true.push_back(data.records[i].label);
    patch_pred.push_back(dqmor::argmax_grade(posteriors[i]));
  }

  const std::vector<dqmor::BagGroup> bags = dqmor::group_by_bag(data);
  std::vector<int> bag_true;
  std::vector<int> mv_pred, pv_pred;
  std::vector<dqmor::BagPrediction> pv_predictions;
  for (const dqmor::BagGroup& bag : bags) {
    if (bag.label == dqmor::kUnlabeled) {
      throw dqmor::InvalidArgumentError("evaluate: bag '" + bag.bag_id +
                                        "' has mixed or missing labels");
    }
    std::vector<dqmor::Posterior> bag_posteriors;
    for (int idx : bag.record_indices) bag_posteriors.push_back(posteriors[idx]);
    const dqmor::BagPrediction mv = dqmor::predict_bag(
        bag.bag_id, bag_posteriors, dqmor::VoteMethod::kMajority);
    dqmor::BagPrediction pv = dqmor::predict_bag(
        bag.bag_id, bag_posteriors, dqmor::VoteMethod::kProbability);
    bag_true.push_back(bag.label);
    mv_pred.push_back(mv.predicted_grade);
    pv_pred.push_back(pv.predicted_grade);
    pv_predictions.push_back(std::move(pv));
  }

  std::vector<dqmor::MetricsReport> reports;
  reports.push_back({"patch", "argmax",
                     dqmor::accuracy(patch_true, patch_pred),
                     dqmor::macro_f1(patch_true, patch_pred, num_grades),
                     dqmor::mae(patch_true, patch_pred),
                     static_cast<int>(patch_true.size())});
  reports.push_back({"bag", "MV", dqmor::accuracy(bag_true, mv_pred),
                     dqmor::macro_f1(bag_true, mv_pred, num_grades),
                     dqmor::mae(bag_true, mv_pred),
                     static_cast<int>(bag_true.size())});
  reports.push_back({"bag", "PV", dqmor::accuracy(bag_true, pv_pred),
                     dqmor::macro_f1(bag_true, pv_pred, num_grades),
                     dqmor::mae(bag_true, pv_pred),
                     static_cast<int>(bag_true.size())});

  write_text_file(opts.out, dqmor::metrics_reports_json(reports));

  std::filesystem::path variance_path = opts.variance_csv;
  if (variance_path.empty()) {
    variance_path = std::filesystem::path(opts.out);
    variance_path.replace_extension(".variance.csv");
  }
  const dqmor::VarianceByErrorGroup groups =
      dqmor::variance_by_error(pv_predictions, bag_true);
  write_text_file(variance_path, dqmor::variance_by_error_csv(groups));

  std::cout << "level  method  accuracy  macro_f1  mae\n";
  for (const dqmor::MetricsReport& r : reports) {
    std::cout << r.level << "  " << r.method << "  " << r.accuracy << "  "
              << r.macro_f1 << "  " << r.mae << "\n";
  }
  std::cout << "\nbag prediction counts (PV), grade_base=" << opts.grade_base
            << ":\n";
  std::vector<int> counts(num_grades, 0);
  for (int g : pv_pred) ++counts[g];
  for (int index = 0; index < num_grades; ++index) {
    std::cout << "  grade " << (opts.grade_base + index) << " (index "
              << index << "): " << counts[index] << " bags\n";
  }
  std::cout << "\nvariance by |error| (PV):\n";
  for (const dqmor::VarianceGroupSummary& s : groups.summaries()) {
    std::cout << "  |err|=" << s.abs_error << " n=" << s.count
              << " median=" << s.median << " mean=" << s.mean << "\n";
  }
  std::cerr << "wrote metrics to " << opts.out << " and variances to "
            << variance_path.string() << "\n";
  return 0;
}

int cmd_predict(const PredictOptions& opts) {
  const dqmor::Checkpoint checkpoint = dqmor::load_checkpoint(opts.checkpoint);
  const int num_grades = model_num_grades(checkpoint);
  const dqmor::FeatureDataset data =
      dqmor::load_csv(opts.data, num_grades, /*allow_unlabeled=*/true);
  if (data.size() == 0) {
    throw dqmor::InvalidArgumentError("predict: dataset is empty");
  }

  const std::vector<dqmor::Posterior> posteriors =
      dataset_posteriors(checkpoint, data);

  std::vector<dqmor::VoteMethod> methods;
  if (opts.method == "both") {
    methods = {dqmor::VoteMethod::kMajority, dqmor::VoteMethod::kProbability};
  } else {
    methods = {dqmor::vote_method_from_string(opts.method)};
  }

  std::vector<dqmor::BagPrediction> predictions;
  for (const dqmor::BagGroup& bag : dqmor::group_by_bag(data)) {
    std::vector<dqmor::Posterior> bag_posteriors;
    for (int idx : bag.record_indices) bag_posteriors.push_back(posteriors[idx]);
    for (dqmor::VoteMethod method : methods) {
      predictions.push_back(
          dqmor::predict_bag(bag.bag_id, bag_posteriors, method));
    }
  }
  dqmor::write_bag_predictions_csv(predictions, num_grades, opts.out);

  if (!opts.per_patch.empty()) {
    std::string out = "bag_id,patch_id,predicted_grade";
    for (int r = 0; r < num_grades; ++r) out += ",p" + std::to_string(r);
    out += "\n";
    for (int i = 0; i < data.size(); ++i) {
      out += data.records[i].bag_id;
      out += ',';
      out += data.records[i].patch_id;
      out += ',';
      out += std::to_string(dqmor::argmax_grade(posteriors[i]));
      char buffer[32];
      for (int r = 0; r < num_grades; ++r) {
        const auto result = std::to_chars(buffer, buffer + sizeof(buffer),
                                          posteriors[i].probs[r]);
        out += ',';
        out.append(buffer, result.ptr);
      }
      out += '\n';
    }
    write_text_file(opts.per_patch, out);
  }
  std::cerr << "wrote " << predictions.size() << " bag predictions to "
            << opts.out << "\n";
  return 0;
}

int cmd_synth(const SynthOptions& opts) {
  const dqmor::FeatureDataset data =
      dqmor::synth_generate(opts.bags, opts.patches, opts.dim, opts.grades,
                            opts.sigma, opts.seed);
  dqmor::save_csv(data, opts.out);
  std::cerr << "wrote " << data.size() << " records (" << opts.bags
            << " bags) to " << opts.out << "\n";
  return 0;
}

int cmd_gradcheck(const GradCheckOptions& opts) {
  const dqmor::ModelKind kind = dqmor::model_kind_from_string(opts.model);
  dqmor::Rng model_rng(dqmor::derive_seed(opts.seed, 0));
  dqmor::Rng batch_rng(dqmor::derive_seed(opts.seed, 1));

  dqmor::Batch batch;
  batch.states.resize(opts.dim, opts.batch);
  batch.labels.resize(opts.batch);
  for (int i = 0; i < opts.batch; ++i) {
    Eigen::VectorXd psi(opts.dim);
    for (int d = 0; d < opts.dim; ++d) psi[d] = batch_rng.gaussian();
    batch.states.col(i) = psi / psi.norm();
    batch.labels[i] = static_cast<int>(
        batch_rng.bounded(static_cast<std::uint64_t>(opts.grades)));
  }

  dqmor::GradCheckReport report;
  if (kind == dqmor::ModelKind::kQmr) {
    const dqmor::FactoredJointDensity model =
        dqmor::random_joint_density(opts.dim, opts.grades, opts.eig, model_rng);
    report = dqmor::gradient_check(model, batch, opts.alpha, opts.step,
                                   opts.perturb);
  } else {
    const dqmor::ClassDensityEnsemble model = dqmor::random_class_ensemble(
        opts.dim, opts.grades, opts.eig, model_rng);
    report =
        dqmor::gradient_check(model, batch, opts.step, opts.perturb);
  }

  for (const auto& [block, error] : report.block_errors) {
    std::cout << "block " << block << " max_rel_error=" << error << "\n";
  }
  const bool pass = report.max_rel_error <= kGradCheckThreshold;
  std::cout << "max_rel_error=" << report.max_rel_error
            << " step=" << report.step
            << " threshold=" << kGradCheckThreshold << "\n"
            << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-matrix ordinal regression on precomputed features"};
  app.require_subcommand(1);

  TrainOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--model", train_opts.model, "model kind: qmr|dmkdc")
      ->check(CLI::IsMember({"qmr", "dmkdc"}));
  train->add_option("--data", train_opts.data, "training dataset CSV")
      ->required();
  train->add_option("--out", train_opts.out, "checkpoint output path")
      ->required();
  train->add_option("--report", train_opts.report,
                    "also write the train report JSON here");
  train->add_option("--grades", train_opts.config.num_grades,
                    "number of ordinal grades")->capture_default_str();
  train->add_option("--rff-dim", train_opts.config.rff_dim,
                    "random Fourier feature dimension")->capture_default_str();
  train->add_option("--eig", train_opts.config.num_components,
                    "density components (eigenvalues)")->capture_default_str();
  train->add_option("--gamma", train_opts.config.gamma,
                    "Gaussian kernel bandwidth")->capture_default_str();
  train->add_option("--alpha", train_opts.config.alpha,
                    "variance regularization weight")->capture_default_str();
  train_opts.lr_option =
      train->add_option("--lr", train_opts.config.learning_rate,
                        "learning rate (default 6e-5 qmr, 5e-3 dmkdc)");
  train->add_option("--epochs", train_opts.config.epochs, "training epochs")->capture_default_str();
  train->add_option("--batch-size", train_opts.config.batch_size,
                    "minibatch size")->capture_default_str();
  train->add_option("--seed", train_opts.config.seed, "master RNG seed")->capture_default_str();
  train->add_option("--init", train_opts.init, "init scheme: random|data")
      ->check(CLI::IsMember({"random", "data"}));

  EvaluateOptions eval_opts;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "patch- and bag-level metrics");
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "model checkpoint")
      ->required();
  evaluate->add_option("--data", eval_opts.data, "labeled dataset CSV")
      ->required();
  evaluate->add_option("--out", eval_opts.out, "metrics JSON output path")
      ->required();
  evaluate->add_option("--variance-csv", eval_opts.variance_csv,
                       "variance-by-error CSV path (default: <out> with "
                       ".variance.csv extension)");
  evaluate->add_option("--grade-base", eval_opts.grade_base,
                       "display offset added to grade indices")->capture_default_str();

  PredictOptions predict_opts;
  CLI::App* predict = app.add_subcommand("predict", "bag-level predictions");
  predict->add_option("--checkpoint", predict_opts.checkpoint,
                      "model checkpoint")
      ->required();
  predict->add_option("--data", predict_opts.data,
                      "dataset CSV (labels optional)")
      ->required();
  predict->add_option("--out", predict_opts.out, "bag prediction CSV path")
      ->required();
  predict->add_option("--method", predict_opts.method,
                      "aggregation: PV|MV|both")->capture_default_str()
      ->check(CLI::IsMember({"PV", "MV", "both"}));
  predict->add_option("--per-patch", predict_opts.per_patch,
                      "also write per-patch posteriors here");

  SynthOptions synth_opts;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a synthetic ordinal dataset");
  synth->add_option("--bags", synth_opts.bags, "number of bags")->capture_default_str();
  synth->add_option("--patches", synth_opts.patches, "patches per bag")->capture_default_str();
  synth->add_option("--dim", synth_opts.dim, "feature dimension")->capture_default_str();
  synth->add_option("--grades", synth_opts.grades, "number of grades")->capture_default_str();
  synth->add_option("--sigma", synth_opts.sigma, "patch noise sigma")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_opts.out, "output CSV path")->required();

  GradCheckOptions grad_opts;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic gradients with finite differences");
  gradcheck->add_option("--model", grad_opts.model, "model kind: qmr|dmkdc")
      ->check(CLI::IsMember({"qmr", "dmkdc"}));
  gradcheck->add_option("--dim", grad_opts.dim, "state dimension")->capture_default_str();
  gradcheck->add_option("--grades", grad_opts.grades, "number of grades")->capture_default_str();
  gradcheck->add_option("--eig", grad_opts.eig, "density components")->capture_default_str();
  gradcheck->add_option("--batch", grad_opts.batch, "batch size")->capture_default_str();
  gradcheck->add_option("--alpha", grad_opts.alpha,
                        "variance regularization weight (qmr)")->capture_default_str();
  gradcheck->add_option("--step", grad_opts.step, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--seed", grad_opts.seed, "RNG seed")->capture_default_str();
  gradcheck->add_option("--perturb", grad_opts.perturb,
                        "corrupt the analytic gradient by this offset")
      ->group("");  // test hook, hidden from --help

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts);
    if (predict->parsed()) return cmd_predict(predict_opts);
    if (synth->parsed()) return cmd_synth(synth_opts);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
