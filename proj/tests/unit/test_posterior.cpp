#include <doctest.h>

#include <Eigen/Dense>

#include "dqmor/posterior.hpp"

using dqmor::Posterior;

namespace {

Posterior make(std::initializer_list<double> probs) {
  Posterior p;
  p.probs.resize(static_cast<long>(probs.size()));
  long i = 0;
  for (double v : probs) p.probs[i++] = v;
  return p;
}

}  // namespace

TEST_CASE("posterior: expectation and variance") {
  const Posterior half = make({0.5, 0.5});
  CHECK(dqmor::expected_grade(half) == doctest::Approx(0.5));
  CHECK(dqmor::posterior_variance(half) == doctest::Approx(0.25));

  const Posterior point = make({0.0, 0.0, 1.0});
  CHECK(dqmor::expected_grade(point) == doctest::Approx(2.0));
  CHECK(dqmor::posterior_variance(point) == doctest::Approx(0.0));

  // E = 0*0.2 + 1*0.5 + 2*0.3 = 1.1; Var = 0.2*1.21 + 0.5*0.01 + 0.3*0.81
  const Posterior skew = make({0.2, 0.5, 0.3});
  CHECK(dqmor::expected_grade(skew) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(dqmor::posterior_variance(skew) ==
        doctest::Approx(0.49).epsilon(1e-12));
}

TEST_CASE("posterior: argmax ties resolve to the higher grade") {
  CHECK(dqmor::argmax_grade(make({0.4, 0.4, 0.2})) == 1);
  CHECK(dqmor::argmax_grade(make({0.5, 0.5})) == 1);
  CHECK(dqmor::argmax_grade(make({0.2, 0.2, 0.2, 0.2, 0.2})) == 4);
  CHECK(dqmor::argmax_grade(make({0.9, 0.05, 0.05})) == 0);
}

TEST_CASE("posterior: uniform_posterior") {
  const Posterior u = dqmor::uniform_posterior(4);
  REQUIRE(u.num_grades() == 4);
  CHECK_FALSE(u.degenerate);
  for (int r = 0; r < 4; ++r) CHECK(u.probs[r] == doctest::Approx(0.25));

  const Posterior d = dqmor::uniform_posterior(3, true);
  CHECK(d.degenerate);
}
