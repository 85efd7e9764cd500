#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dqmor/posterior.hpp"
#include "dqmor/rff.hpp"
#include "dqmor/rng.hpp"

namespace dqmor {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A measurement whose score mass falls below this threshold is treated as
/// degenerate and answered with the uniform distribution.
inline constexpr double kDegenerateTrace = 1e-12;

/// brute_force_posterior() and materialize_joint_density() refuse joint
/// dimensions D*N above this; they build (D*N)^2 dense matrices.
inline constexpr int kOracleMaxJointDim = 256;

/// Minibatch of encoded states (one unit-norm column per sample) paired
/// with grade labels.
struct Batch {
  Eigen::MatrixXd states;   // state_dim x batch_size
  std::vector<int> labels;  // each in [0, num_grades)

  int size() const { return static_cast<int>(labels.size()); }
};

Batch make_batch(const std::vector<std::pair<StateVector, int>>& samples);

/// Numerically stable softmax; the eigenvalue reparameterization shared by
/// both model families.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Joint input-label density matrix in factored form,
///
///   rho = sum_k softmax(lambda_logits)_k * vhat_k vhat_k^T,
///
/// where vhat_k = v.row(k) / |v.row(k)| lives in the D*N joint space and is
/// read row-major as a D x N block: entry (d, r) sits at flat index d*N + r.
/// Rows of v are stored unnormalized and renormalized inside every forward
/// pass, so rho has unit trace for any parameter values and gradient descent
/// can run unconstrained on v and lambda_logits.
struct FactoredJointDensity {
  int state_dim = 0;   // D
  int num_grades = 0;  // N
  RowMatrixXd v;       // K x (D*N)
  Eigen::VectorXd lambda_logits;  // K

  int num_components() const {
    return static_cast<int>(lambda_logits.size());
  }
  /// softmax(lambda_logits); a probability simplex.
  Eigen::VectorXd eigenvalues() const;
};

/// Uniform eigenvalue logits and i.i.d. standard normal rows, normalized.
FactoredJointDensity random_joint_density(int state_dim, int num_grades,
                                          int num_components, Rng& rng);

/// Grade posterior by measurement collapse of the joint density: computes
/// u_k = reshape(vhat_k)^T psi, scores s_r = sum_k lambda_k u_{k,r}^2 and
/// normalizes s to a distribution.  Only the diagonal of the label-space
/// density is ever formed; brute_force_posterior() validates this shortcut
/// against the full computation.
///
/// The map is homogeneous in psi (any positive scaling of psi yields the
/// same posterior), so callers may pass un-normalized states.  A score mass
/// below kDegenerateTrace returns the uniform fallback with the degenerate
/// flag set.
Posterior posterior(const FactoredJointDensity& model,
                    const Eigen::VectorXd& psi);
Posterior posterior(const FactoredJointDensity& model, const StateVector& psi);

/// Literal dense evaluation of the same measurement: materializes rho, the
/// prediction operator |psi><psi| (x) Id, collapses, renormalizes by the
/// trace and performs the partial trace over the input subsystem by explicit
/// index summation.  Verification oracle, not production inference; guarded
/// by kOracleMaxJointDim (throws TooLargeError).
Posterior brute_force_posterior(const FactoredJointDensity& model,
                                const Eigen::VectorXd& psi);

/// Dense (D*N) x (D*N) joint density; same guard as brute_force_posterior.
Eigen::MatrixXd materialize_joint_density(const FactoredJointDensity& model);

/// Mean over the batch of (y - yhat)^2 + alpha * Var[posterior], the
/// squared-error-plus-variance training objective.
double qmr_loss(const FactoredJointDensity& model, const Batch& batch,
                double alpha);

/// Hyperparameters for training either model family (alpha is ignored by
/// the classifier).
struct QmrConfig {
  int rff_dim = 1024;
  int num_grades = 5;
  int num_components = 32;
  double gamma = 0.0001220703125;  // 2^-13
  double alpha = 0.4;
  double learning_rate = 6e-5;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

}  // namespace dqmor
