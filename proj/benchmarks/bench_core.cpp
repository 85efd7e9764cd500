// Microbenchmarks for the numeric hot paths: encoding, posterior
// computation, one gradient step, and bag aggregation.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "dqmor/aggregation.hpp"
#include "dqmor/dmkdc.hpp"
#include "dqmor/posterior.hpp"
#include "dqmor/qmr.hpp"
#include "dqmor/rff.hpp"
#include "dqmor/rng.hpp"
#include "dqmor/training.hpp"

namespace {

Eigen::VectorXd random_input(int dim, dqmor::Rng& rng) {
  Eigen::VectorXd x(dim);
  for (int d = 0; d < dim; ++d) x[d] = rng.gaussian();
  return x;
}

void BM_RffEncode(benchmark::State& state) {
  const int input_dim = static_cast<int>(state.range(0));
  const int rff_dim = static_cast<int>(state.range(1));
  const dqmor::RffEncoder encoder =
      dqmor::RffEncoder::sample(input_dim, rff_dim, 0.0001220703125, 1);
  dqmor::Rng rng(2);
  const Eigen::VectorXd x = random_input(input_dim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder.encode(x));
  }
}
BENCHMARK(BM_RffEncode)->Args({128, 1024})->Args({2048, 1024});

void BM_QmrPosterior(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int components = static_cast<int>(state.range(1));
  dqmor::Rng rng(3);
  const dqmor::FactoredJointDensity model =
      dqmor::random_joint_density(dim, 5, components, rng);
  const Eigen::VectorXd psi = random_input(dim, rng).normalized();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dqmor::posterior(model, psi));
  }
}
BENCHMARK(BM_QmrPosterior)->Args({256, 16})->Args({1024, 32});

void BM_DmkdcPosterior(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  dqmor::Rng rng(4);
  const dqmor::ClassDensityEnsemble model =
      dqmor::random_class_ensemble(dim, 5, 32, rng);
  const Eigen::VectorXd psi = random_input(dim, rng).normalized();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dqmor::dmkdc_posterior(model, psi));
  }
}
BENCHMARK(BM_DmkdcPosterior)->Arg(256)->Arg(1024);

void BM_QmrGradient(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  dqmor::Rng rng(5);
  const dqmor::FactoredJointDensity model =
      dqmor::random_joint_density(dim, 5, 16, rng);
  dqmor::Batch batch;
  const int count = 32;
  batch.states.resize(dim, count);
  batch.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    batch.states.col(i) = random_input(dim, rng).normalized();
    batch.labels[i] = static_cast<int>(rng.bounded(5));
  }
  dqmor::QmrGradient grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dqmor::qmr_loss_gradient(model, batch, 0.4, grad));
  }
}
BENCHMARK(BM_QmrGradient)->Arg(128)->Arg(256);

void BM_ProbabilityVote(benchmark::State& state) {
  const int patches = static_cast<int>(state.range(0));
  dqmor::Rng rng(6);
  std::vector<dqmor::Posterior> posteriors(patches);
  for (auto& p : posteriors) {
    p.probs.resize(5);
    double total = 0.0;
    for (int r = 0; r < 5; ++r) {
      p.probs[r] = rng.uniform() + 1e-3;
      total += p.probs[r];
    }
    p.probs /= total;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dqmor::probability_vote(posteriors));
  }
}
BENCHMARK(BM_ProbabilityVote)->Arg(8)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
