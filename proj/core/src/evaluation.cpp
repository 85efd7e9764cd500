#include "dqmor/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <json.hpp>

#include "dqmor/errors.hpp"
#include "text_format.hpp"

namespace dqmor {

namespace {

void check_paired(const std::vector<int>& y_true,
                  const std::vector<int>& y_pred, const char* who) {
  if (y_true.empty()) {
    throw InvalidArgumentError(std::string(who) + ": empty input");
  }
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgumentError(std::string(who) + ": " +
                               std::to_string(y_true.size()) + " labels vs " +
                               std::to_string(y_pred.size()) + " predictions");
  }
}

}  // namespace

double accuracy(const std::vector<int>& y_true,
                const std::vector<int>& y_pred) {
  check_paired(y_true, y_pred, "accuracy");
  int hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == y_pred[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

std::vector<double> per_class_f1(const std::vector<int>& y_true,
                                 const std::vector<int>& y_pred,
                                 int num_grades) {
  check_paired(y_true, y_pred, "per_class_f1");
  if (num_grades < 1) {
    throw InvalidArgumentError("per_class_f1: num_grades must be positive");
  }
  std::vector<int> tp(num_grades, 0), fp(num_grades, 0), fn(num_grades, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= num_grades || p < 0 || p >= num_grades) {
      throw InvalidArgumentError("per_class_f1: grade outside [0, " +
                                 std::to_string(num_grades) + ")");
    }
    if (t == p) {
      ++tp[t];
    } else {
      ++fn[t];
      ++fp[p];
    }
  }
  std::vector<double> f1(num_grades, 0.0);
  for (int c = 0; c < num_grades; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    f1[c] = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return f1;
}

double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                int num_grades) {
  const std::vector<double> f1 = per_class_f1(y_true, y_pred, num_grades);
  return std::accumulate(f1.begin(), f1.end(), 0.0) /
         static_cast<double>(num_grades);
}

double mae(const std::vector<double>& y_true,
           const std::vector<double>& y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    throw InvalidArgumentError("mae: mismatched or empty inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    sum += std::abs(y_true[i] - y_pred[i]);
  }
  return sum / static_cast<double>(y_true.size());
}

double mae(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  check_paired(y_true, y_pred, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    sum += std::abs(y_true[i] - y_pred[i]);
  }
  return sum / static_cast<double>(y_true.size());
}

std::string metrics_reports_json(const std::vector<MetricsReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const MetricsReport& r : reports) {
    j.push_back({{"level", r.level},
                 {"method", r.method},
                 {"accuracy", r.accuracy},
                 {"macro_f1", r.macro_f1},
                 {"mae", r.mae},
                 {"count", r.count}});
  }
  return j.dump(2) + "\n";
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) {
    throw InvalidArgumentError("quantile_linear: empty sample");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw InvalidArgumentError("quantile_linear: q must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(position);
  if (lower + 1 >= values.size()) return values.back();
  const double fraction = position - static_cast<double>(lower);
  return values[lower] + fraction * (values[lower + 1] - values[lower]);
}

std::vector<VarianceGroupSummary> VarianceByErrorGroup::summaries() const {
  std::vector<VarianceGroupSummary> result;
  for (const auto& [abs_error, group] : variances) {
    VarianceGroupSummary s;
    s.abs_error = abs_error;
    s.count = static_cast<int>(group.size());
    s.min = quantile_linear(group, 0.0);
    s.q1 = quantile_linear(group, 0.25);
    s.median = quantile_linear(group, 0.5);
    s.q3 = quantile_linear(group, 0.75);
    s.max = quantile_linear(group, 1.0);
    s.mean = std::accumulate(group.begin(), group.end(), 0.0) /
             static_cast<double>(group.size());
    result.push_back(s);
  }
  return result;
}

VarianceByErrorGroup variance_by_error(
    const std::vector<BagPrediction>& predictions,
    const std::vector<int>& y_true) {
  if (predictions.empty() || predictions.size() != y_true.size()) {
    throw InvalidArgumentError(
        "variance_by_error: mismatched or empty inputs");
  }
  VarianceByErrorGroup groups;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const BagPrediction& pred = predictions[i];
    if (!pred.variance) {
      throw InvalidArgumentError("variance_by_error: bag '" + pred.bag_id +
                                 "' carries no variance (majority vote?)");
    }
    const int abs_error = std::abs(y_true[i] - pred.predicted_grade);
    groups.variances[abs_error].push_back(*pred.variance);
  }
  return groups;
}

std::string variance_by_error_csv(const VarianceByErrorGroup& groups) {
  std::string out = "abs_error,variance\n";
  for (const auto& [abs_error, group] : groups.variances) {
    for (double v : group) {
      out += std::to_string(abs_error);
      out += ',';
      out += detail::format_double(v);
      out += '\n';
    }
  }
  return out;
}

std::string variance_by_error_json(const VarianceByErrorGroup& groups) {
  nlohmann::json j = nlohmann::json::array();
  for (const VarianceGroupSummary& s : groups.summaries()) {
    j.push_back({{"abs_error", s.abs_error},
                 {"count", s.count},
                 {"min", s.min},
                 {"q1", s.q1},
                 {"median", s.median},
                 {"q3", s.q3},
                 {"max", s.max},
                 {"mean", s.mean}});
  }
  return j.dump(2) + "\n";
}

}  // namespace dqmor
