#include "dqmor/rff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dqmor/errors.hpp"
#include "dqmor/rng.hpp"

namespace dqmor {

RffEncoder RffEncoder::sample(int input_dim, int rff_dim, double gamma,
                              std::uint64_t seed) {
  if (input_dim < 1 || rff_dim < 1) {
    throw InvalidArgumentError("RffEncoder: dimensions must be positive, got "
                               "input_dim=" + std::to_string(input_dim) +
                               " rff_dim=" + std::to_string(rff_dim));
  }
  if (!(gamma > 0.0)) {
    throw InvalidArgumentError("RffEncoder: gamma must be positive, got " +
                               std::to_string(gamma));
  }
  Rng rng(seed);
  const double freq_sigma = std::sqrt(2.0 * gamma);
  Eigen::MatrixXd weights(rff_dim, input_dim);
  // Fixed draw order: W row by row, then the phases.
  for (int i = 0; i < rff_dim; ++i) {
    for (int j = 0; j < input_dim; ++j) {
      weights(i, j) = freq_sigma * rng.gaussian();
    }
  }
  Eigen::VectorXd phases(rff_dim);
  for (int i = 0; i < rff_dim; ++i) {
    phases[i] = rng.uniform(0.0, 2.0 * 3.141592653589793238462643383279502884);
  }
  return RffEncoder(input_dim, rff_dim, gamma, seed, std::move(weights),
                    std::move(phases));
}

RffEncoder::RffEncoder(int input_dim, int rff_dim, double gamma,
                       std::uint64_t seed, Eigen::MatrixXd weights,
                       Eigen::VectorXd phases)
    : input_dim_(input_dim),
      rff_dim_(rff_dim),
      gamma_(gamma),
      seed_(seed),
      weights_(std::move(weights)),
      phases_(std::move(phases)) {
  if (input_dim_ < 1 || rff_dim_ < 1 || !(gamma_ > 0.0)) {
    throw InvalidArgumentError("RffEncoder: invalid dimensions or gamma");
  }
  if (weights_.rows() != rff_dim_ || weights_.cols() != input_dim_ ||
      phases_.size() != rff_dim_) {
    throw InvalidArgumentError("RffEncoder: weight/phase shapes do not match "
                               "the declared dimensions");
  }
}

Eigen::VectorXd RffEncoder::raw_features(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim_) {
    throw InvalidArgumentError(
        "raw_features: expected input of length " +
        std::to_string(input_dim_) + ", got " + std::to_string(x.size()));
  }
  const double scale = std::sqrt(2.0 / rff_dim_);
  return (scale * ((weights_ * x + phases_).array().cos())).matrix();
}

StateVector RffEncoder::encode(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = raw_features(x);
  const double norm = z.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) {
    throw DegenerateEncodingError(
        "encode: raw feature vector has degenerate norm " +
        std::to_string(norm));
  }
  return StateVector{z / norm};
}

double RffEncoder::raw_kernel_estimate(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& y) const {
  return raw_features(x).dot(raw_features(y));
}

}  // namespace dqmor
