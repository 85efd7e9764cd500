#include "dqmor/aggregation.hpp"

#include <fstream>
#include <string>
#include <vector>

#include "dqmor/errors.hpp"
#include "text_format.hpp"

namespace dqmor {

std::string to_string(VoteMethod method) {
  return method == VoteMethod::kMajority ? "MV" : "PV";
}

VoteMethod vote_method_from_string(const std::string& name) {
  if (name == "MV" || name == "majority") return VoteMethod::kMajority;
  if (name == "PV" || name == "probability") return VoteMethod::kProbability;
  throw InvalidArgumentError("unknown vote method '" + name +
                             "' (expected MV|PV)");
}

Posterior probability_vote(const std::vector<Posterior>& patch_posteriors) {
  if (patch_posteriors.empty()) {
    throw InvalidArgumentError("probability_vote: no patch posteriors");
  }
  const int num_grades = patch_posteriors.front().num_grades();
  Posterior result;
  result.probs = Eigen::VectorXd::Zero(num_grades);
  for (std::size_t i = 0; i < patch_posteriors.size(); ++i) {
    const Posterior& p = patch_posteriors[i];
    if (p.num_grades() != num_grades) {
      throw InvalidArgumentError(
          "probability_vote: patch " + std::to_string(i) + " has " +
          std::to_string(p.num_grades()) + " grades, expected " +
          std::to_string(num_grades));
    }
    // Running mean: identical inputs leave the increment exactly zero, so
    // averaging n copies of one distribution reproduces it bit for bit.
    result.probs += (p.probs - result.probs) / static_cast<double>(i + 1);
    result.degenerate = result.degenerate || p.degenerate;
  }
  return result;
}

int majority_vote(const std::vector<int>& patch_grades, int num_grades) {
  if (patch_grades.empty()) {
    throw InvalidArgumentError("majority_vote: no patch grades");
  }
  if (num_grades < 1) {
    throw InvalidArgumentError("majority_vote: num_grades must be positive");
  }
  std::vector<int> counts(static_cast<std::size_t>(num_grades), 0);
  for (int g : patch_grades) {
    if (g < 0 || g >= num_grades) {
      throw InvalidArgumentError("majority_vote: grade " + std::to_string(g) +
                                 " outside [0, " + std::to_string(num_grades) +
                                 ")");
    }
    ++counts[static_cast<std::size_t>(g)];
  }
  int best = 0;
  for (int g = 1; g < num_grades; ++g) {
    if (counts[static_cast<std::size_t>(g)] >=
        counts[static_cast<std::size_t>(best)]) {
      best = g;  // ties resolve toward the higher grade
    }
  }
  return best;
}

BagPrediction predict_bag(const std::string& bag_id,
                          const std::vector<Posterior>& patch_posteriors,
                          VoteMethod method) {
  if (patch_posteriors.empty()) {
    throw InvalidArgumentError("predict_bag: bag '" + bag_id +
                               "' has no patches");
  }
  BagPrediction prediction;
  prediction.bag_id = bag_id;
  prediction.method = method;
  prediction.num_patches = static_cast<int>(patch_posteriors.size());
  if (method == VoteMethod::kProbability) {
    Posterior mixed = probability_vote(patch_posteriors);
    prediction.predicted_grade = argmax_grade(mixed);
    prediction.expected = expected_grade(mixed);
    prediction.variance = posterior_variance(mixed);
    prediction.distribution = std::move(mixed);
  } else {
    const int num_grades = patch_posteriors.front().num_grades();
    std::vector<int> grades;
    grades.reserve(patch_posteriors.size());
    for (const Posterior& p : patch_posteriors) {
      if (p.num_grades() != num_grades) {
        throw InvalidArgumentError("predict_bag: bag '" + bag_id +
                                   "' mixes grade counts");
      }
      grades.push_back(argmax_grade(p));
    }
    prediction.predicted_grade = majority_vote(grades, num_grades);
  }
  return prediction;
}

std::string bag_predictions_csv(const std::vector<BagPrediction>& predictions,
                                int num_grades) {
  if (num_grades < 1) {
    throw InvalidArgumentError(
        "bag_predictions_csv: num_grades must be positive");
  }
  std::string out =
      "bag_id,method,predicted_grade,expected_grade,variance,num_patches";
  for (int r = 0; r < num_grades; ++r) {
    out += ",p" + std::to_string(r);
  }
  out += "\n";
  for (const BagPrediction& pred : predictions) {
    out += pred.bag_id;
    out += ',';
    out += to_string(pred.method);
    out += ',';
    out += std::to_string(pred.predicted_grade);
    out += ',';
    if (pred.expected) out += detail::format_double(*pred.expected);
    out += ',';
    if (pred.variance) out += detail::format_double(*pred.variance);
    out += ',';
    out += std::to_string(pred.num_patches);
    if (pred.distribution) {
      if (pred.distribution->num_grades() != num_grades) {
        throw InvalidArgumentError("bag_predictions_csv: bag '" + pred.bag_id +
                                   "' has " +
                                   std::to_string(
                                       pred.distribution->num_grades()) +
                                   " grades, expected " +
                                   std::to_string(num_grades));
      }
      for (int r = 0; r < num_grades; ++r) {
        out += ',';
        out += detail::format_double(pred.distribution->probs[r]);
      }
    } else {
      for (int r = 0; r < num_grades; ++r) out += ',';
    }
    out += "\n";
  }
  return out;
}

void write_bag_predictions_csv(const std::vector<BagPrediction>& predictions,
                               int num_grades,
                               const std::filesystem::path& path) {
  std::ofstream file(path);
  if (!file) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  file << bag_predictions_csv(predictions, num_grades);
  if (!file) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

}  // namespace dqmor
