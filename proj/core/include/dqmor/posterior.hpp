#pragma once

#include <Eigen/Dense>

#include "dqmor/errors.hpp"

namespace dqmor {

/// Discrete probability distribution over ordinal grades 0 .. N-1.
/// Entries are nonnegative and sum to 1 within 1e-9.
struct Posterior {
  Eigen::VectorXd probs;
  /// Set when a measurement had ~zero trace and the uniform fallback was
  /// returned instead.
  bool degenerate = false;

  int num_grades() const { return static_cast<int>(probs.size()); }
};

inline Posterior uniform_posterior(int num_grades, bool degenerate = false) {
  if (num_grades < 1) {
    throw InvalidArgumentError("uniform_posterior: num_grades must be >= 1");
  }
  return {Eigen::VectorXd::Constant(num_grades, 1.0 / num_grades), degenerate};
}

/// Mean grade, sum_r r * p_r; lies in [0, N-1].
inline double expected_grade(const Posterior& p) {
  double mean = 0.0;
  for (int r = 0; r < p.num_grades(); ++r) mean += r * p.probs[r];
  return mean;
}

/// Spread around the mean grade, sum_r p_r * (r - mean)^2; the model's
/// uncertainty measure.
inline double posterior_variance(const Posterior& p) {
  const double mean = expected_grade(p);
  double var = 0.0;
  for (int r = 0; r < p.num_grades(); ++r) {
    const double d = r - mean;
    var += p.probs[r] * d * d;
  }
  return var;
}

/// Index of the largest probability; ties resolve to the higher grade.
inline int argmax_grade(const Posterior& p) {
  int best = 0;
  for (int r = 1; r < p.num_grades(); ++r) {
    if (p.probs[r] >= p.probs[best]) best = r;
  }
  return best;
}

}  // namespace dqmor
