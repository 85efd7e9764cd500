#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dqmor/posterior.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rng.hpp"

namespace dqmor {

/// Log of zero is avoided by clamping probabilities with this epsilon in
/// cross_entropy_loss; an exactly-orthogonal state reaches score 0.
inline constexpr double kCrossEntropyEps = 1e-12;

/// One factored density matrix, rho_c = sum_k softmax(logits)_k vhat vhat^T,
/// with rows of v renormalized in the forward pass as in
/// FactoredJointDensity.
struct ClassDensity {
  RowMatrixXd v;                  // K x D
  Eigen::VectorXd lambda_logits;  // K
};

/// One density matrix per grade; K is shared across classes.
struct ClassDensityEnsemble {
  int state_dim = 0;                 // D
  std::vector<ClassDensity> classes;  // size N

  int num_grades() const { return static_cast<int>(classes.size()); }
  int num_components() const {
    return classes.empty()
               ? 0
               : static_cast<int>(classes.front().lambda_logits.size());
  }
};

ClassDensityEnsemble random_class_ensemble(int state_dim, int num_grades,
                                           int num_components, Rng& rng);

/// Expected value <psi| rho_c |psi> for every class; each lies in [0, 1]
/// for unit-norm psi.
Eigen::VectorXd class_scores(const ClassDensityEnsemble& model,
                             const Eigen::VectorXd& psi);

/// Scores normalized to a distribution (no class priors).  All-zero scores
/// return the uniform fallback with the degenerate flag set.
Posterior dmkdc_posterior(const ClassDensityEnsemble& model,
                          const Eigen::VectorXd& psi);
Posterior dmkdc_posterior(const ClassDensityEnsemble& model,
                          const StateVector& psi);

/// Mean over the batch of -log(p_label + kCrossEntropyEps).
double cross_entropy_loss(const ClassDensityEnsemble& model,
                          const Batch& batch);

}  // namespace dqmor
