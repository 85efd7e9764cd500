#pragma once

#include <map>
#include <string>
#include <vector>

#include "dqmor/aggregation.hpp"

namespace dqmor {

/// Fraction of exact matches.
double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Unweighted mean of per-class F1 over all num_grades classes; a class
/// with no true and no predicted occurrences contributes 0.
double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                int num_grades);

/// Per-class F1 scores (same zero-division convention as macro_f1).
std::vector<double> per_class_f1(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred,
                                 int num_grades);

/// Mean absolute error, in grade-index units.
double mae(const std::vector<double>& y_true, const std::vector<double>& y_pred);
double mae(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct MetricsReport {
  std::string level;   // "patch" | "bag"
  std::string method;  // "argmax" | "MV" | "PV"
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double mae = 0.0;
  int count = 0;
};

std::string metrics_reports_json(const std::vector<MetricsReport>& reports);

/// Quantile of a sample by linear interpolation between order statistics;
/// q in [0, 1], values need not be sorted.
double quantile_linear(std::vector<double> values, double q);

struct VarianceGroupSummary {
  int abs_error = 0;
  int count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

/// Predicted variances grouped by integer absolute error
/// |y_true - predicted_grade|; the data behind an uncertainty-vs-error
/// boxplot.
struct VarianceByErrorGroup {
  std::map<int, std::vector<double>> variances;

  std::vector<VarianceGroupSummary> summaries() const;
};

/// Groups probability-vote predictions by absolute error.  Majority-vote
/// predictions have no variance and are rejected with
/// InvalidArgumentError.
VarianceByErrorGroup variance_by_error(
    const std::vector<BagPrediction>& predictions,
    const std::vector<int>& y_true);

/// Raw table, one `abs_error,variance` row per bag.
std::string variance_by_error_csv(const VarianceByErrorGroup& groups);
/// Five-number summaries plus means, per group.
std::string variance_by_error_json(const VarianceByErrorGroup& groups);

}  // namespace dqmor
