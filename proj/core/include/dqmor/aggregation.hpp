#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dqmor/posterior.hpp"

namespace dqmor {

enum class VoteMethod {
  kMajority,     // modal per-patch argmax grade
  kProbability,  // mean of per-patch posteriors, then argmax
};

std::string to_string(VoteMethod method);
VoteMethod vote_method_from_string(const std::string& name);

/// Bag-level (whole-slide) prediction.  The distribution and its statistics
/// exist only for probability voting; majority voting discards the
/// probabilistic structure.
struct BagPrediction {
  std::string bag_id;
  VoteMethod method = VoteMethod::kProbability;
  int predicted_grade = 0;
  int num_patches = 0;
  std::optional<Posterior> distribution;
  std::optional<double> expected;
  std::optional<double> variance;
};

/// Elementwise arithmetic mean of the patch posteriors (uniform patch
/// weights, by the law of total probability).  Implemented as a running
/// mean, so averaging n copies of one distribution returns it exactly.
/// Throws InvalidArgumentError on an empty list or mixed grade counts.
Posterior probability_vote(const std::vector<Posterior>& patch_posteriors);

/// Modal grade; ties resolve to the higher grade.
int majority_vote(const std::vector<int>& patch_grades, int num_grades);

BagPrediction predict_bag(const std::string& bag_id,
                          const std::vector<Posterior>& patch_posteriors,
                          VoteMethod method);

/// CSV rows `bag_id,method,predicted_grade,expected_grade,variance,
/// num_patches,p0,...,p{N-1}`; majority-vote rows leave the distribution
/// columns empty.
std::string bag_predictions_csv(const std::vector<BagPrediction>& predictions,
                                int num_grades);
void write_bag_predictions_csv(const std::vector<BagPrediction>& predictions,
                               int num_grades,
                               const std::filesystem::path& path);

}  // namespace dqmor
