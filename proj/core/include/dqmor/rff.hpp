#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace dqmor {

/// Unit-norm encoded input state (Euclidean norm 1 within 1e-9).
struct StateVector {
  Eigen::VectorXd values;

  int dim() const { return static_cast<int>(values.size()); }
};

/// Random Fourier feature map approximating the RBF kernel
///   k(x, y) = exp(-gamma * |x - y|^2).
///
/// Frequencies W (rff_dim x input_dim) are i.i.d. N(0, 2*gamma) draws and
/// phases b are uniform in [0, 2*pi], so the raw features
///   z(x)_i = sqrt(2 / D) * cos(w_i . x + b_i)
/// satisfy E[z(x) . z(y)] = k(x, y).  encode() scales z(x) to unit length so
/// the result is usable as a pure state; raw_kernel_estimate() works on the
/// un-normalized maps and is what actually approximates the kernel.
///
/// Encoders are immutable.  Identical (input_dim, rff_dim, gamma, seed)
/// reproduce W and b bit for bit: sampling fills W row by row, then b, with
/// every Gaussian consuming exactly two uniform draws (see Rng).
class RffEncoder {
 public:
  /// Draws a fresh encoder.  Throws InvalidArgumentError on non-positive
  /// dimensions or gamma.
  static RffEncoder sample(int input_dim, int rff_dim, double gamma,
                           std::uint64_t seed);

  /// Rebuilds an encoder from materialized arrays (checkpoint path).
  /// Dimensions of weights/phases must match input_dim/rff_dim.
  RffEncoder(int input_dim, int rff_dim, double gamma, std::uint64_t seed,
             Eigen::MatrixXd weights, Eigen::VectorXd phases);

  /// Un-normalized feature map z(x); length rff_dim.
  Eigen::VectorXd raw_features(const Eigen::VectorXd& x) const;

  /// z(x) normalized to unit length.  Throws DegenerateEncodingError when
  /// the raw norm is not a positive finite value above 1e-12.
  StateVector encode(const Eigen::VectorXd& x) const;

  /// z(x) . z(y) on the un-normalized maps; Monte Carlo estimate of the RBF
  /// kernel value.
  double raw_kernel_estimate(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y) const;

  int input_dim() const { return input_dim_; }
  int rff_dim() const { return rff_dim_; }
  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& weights() const { return weights_; }  // D x n
  const Eigen::VectorXd& phases() const { return phases_; }    // D

 private:
  int input_dim_;
  int rff_dim_;
  double gamma_;
  std::uint64_t seed_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd phases_;
};

}  // namespace dqmor
