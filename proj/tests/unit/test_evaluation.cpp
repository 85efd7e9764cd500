#include <doctest.h>

#include <string>
#include <vector>

#include "dqmor/errors.hpp"
#include "dqmor/evaluation.hpp"

using dqmor::BagPrediction;

TEST_CASE("evaluation: accuracy") {
  CHECK(dqmor::accuracy({0, 1, 2, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
  CHECK(dqmor::accuracy({2}, {2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)dqmor::accuracy({}, {}),
                  dqmor::InvalidArgumentError);
  CHECK_THROWS_AS((void)dqmor::accuracy({0, 1}, {0}),
                  dqmor::InvalidArgumentError);
}

TEST_CASE("evaluation: macro F1 against hand-checked values") {
  // class 0: tp=2 -> F1 1; classes 1 and 2 swap -> F1 0 each; macro 1/3.
  CHECK(dqmor::macro_f1({0, 1, 2, 0}, {0, 2, 1, 0}, 3) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
  // Absent classes contribute 0, not NaN.
  CHECK(dqmor::macro_f1({0, 0}, {0, 0}, 3) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
  // Mixed case: per-class F1 = (1, 0.5, 2/3), macro = 13/18.
  CHECK(dqmor::macro_f1({0, 1, 1, 2, 2, 2}, {0, 1, 2, 2, 1, 2}, 3) ==
        doctest::Approx(13.0 / 18).epsilon(1e-12));

  const std::vector<double> f1 =
      dqmor::per_class_f1({0, 1, 1, 2, 2, 2}, {0, 1, 2, 2, 1, 2}, 3);
  REQUIRE(f1.size() == 3);
  CHECK(f1[0] == doctest::Approx(1.0));
  CHECK(f1[1] == doctest::Approx(0.5));
  CHECK(f1[2] == doctest::Approx(2.0 / 3).epsilon(1e-12));

  CHECK_THROWS_AS((void)dqmor::macro_f1({0, 5}, {0, 1}, 3),
                  dqmor::InvalidArgumentError);
}

TEST_CASE("evaluation: mean absolute error") {
  CHECK(dqmor::mae(std::vector<int>{0, 2, 4}, std::vector<int>{1, 2, 1}) ==
        doctest::Approx(4.0 / 3).epsilon(1e-12));
  CHECK(dqmor::mae(std::vector<double>{0.5, 1.0},
                   std::vector<double>{1.0, 1.0}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(
      (void)dqmor::mae(std::vector<int>{}, std::vector<int>{}),
      dqmor::InvalidArgumentError);
}

TEST_CASE("evaluation: quantile with linear interpolation") {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(dqmor::quantile_linear(v, 0.0) == doctest::Approx(1.0));
  CHECK(dqmor::quantile_linear(v, 0.25) == doctest::Approx(1.75));
  CHECK(dqmor::quantile_linear(v, 0.5) == doctest::Approx(2.5));
  CHECK(dqmor::quantile_linear(v, 0.75) == doctest::Approx(3.25));
  CHECK(dqmor::quantile_linear(v, 1.0) == doctest::Approx(4.0));
  // Unsorted input is sorted internally.
  CHECK(dqmor::quantile_linear({5.0, 1.0, 9.0}, 0.1) ==
        doctest::Approx(1.8).epsilon(1e-12));
  CHECK(dqmor::quantile_linear({5.0, 1.0, 9.0}, 0.9) ==
        doctest::Approx(8.2).epsilon(1e-12));
  CHECK(dqmor::quantile_linear({3.0}, 0.5) == doctest::Approx(3.0));
  CHECK_THROWS_AS((void)dqmor::quantile_linear({}, 0.5),
                  dqmor::InvalidArgumentError);
  CHECK_THROWS_AS((void)dqmor::quantile_linear({1.0}, 1.5),
                  dqmor::InvalidArgumentError);
}

namespace {

BagPrediction pv_prediction(const std::string& id, int grade,
                            double variance) {
  BagPrediction p;
  p.bag_id = id;
  p.method = dqmor::VoteMethod::kProbability;
  p.predicted_grade = grade;
  p.num_patches = 1;
  p.variance = variance;
  return p;
}

}  // namespace

TEST_CASE("evaluation: variance grouped by absolute error") {
  const std::vector<BagPrediction> predictions = {
      pv_prediction("a", 0, 0.10), pv_prediction("b", 1, 0.30),
      pv_prediction("c", 2, 0.50), pv_prediction("d", 3, 0.70),
      pv_prediction("e", 0, 0.20)};
  const std::vector<int> y_true = {0, 0, 0, 0, 0};

  const dqmor::VarianceByErrorGroup groups =
      dqmor::variance_by_error(predictions, y_true);
  REQUIRE(groups.variances.size() == 4);
  CHECK(groups.variances.at(0) == std::vector<double>{0.10, 0.20});
  CHECK(groups.variances.at(3) == std::vector<double>{0.70});

  const auto summaries = groups.summaries();
  REQUIRE(summaries.size() == 4);
  CHECK(summaries[0].abs_error == 0);
  CHECK(summaries[0].count == 2);
  CHECK(summaries[0].mean == doctest::Approx(0.15));
  CHECK(summaries[0].median == doctest::Approx(0.15));
  CHECK(summaries[0].min == doctest::Approx(0.10));
  CHECK(summaries[0].max == doctest::Approx(0.20));

  const std::string csv = dqmor::variance_by_error_csv(groups);
  CHECK(csv.rfind("abs_error,variance\n", 0) == 0);
  CHECK(csv.find("0,0.1\n") != std::string::npos);
  CHECK(csv.find("3,0.7\n") != std::string::npos);

  const std::string json = dqmor::variance_by_error_json(groups);
  CHECK(json.find("\"abs_error\": 0") != std::string::npos);
  CHECK(json.find("\"median\"") != std::string::npos);

  // Majority-vote predictions carry no variance.
  BagPrediction mv;
  mv.bag_id = "m";
  mv.method = dqmor::VoteMethod::kMajority;
  mv.predicted_grade = 0;
  CHECK_THROWS_AS((void)dqmor::variance_by_error({mv}, {0}),
                  dqmor::InvalidArgumentError);
  CHECK_THROWS_AS((void)dqmor::variance_by_error(predictions, {0}),
                  dqmor::InvalidArgumentError);
}

TEST_CASE("evaluation: metrics reports serialize to JSON") {
  dqmor::MetricsReport patch{"patch", "argmax", 0.75, 0.5, 0.25, 16};
  dqmor::MetricsReport bag{"bag", "PV", 1.0, 1.0, 0.0, 4};
  const std::string json = dqmor::metrics_reports_json({patch, bag});
  CHECK(json.find("\"level\": \"patch\"") != std::string::npos);
  CHECK(json.find("\"method\": \"PV\"") != std::string::npos);
  CHECK(json.find("\"accuracy\": 0.75") != std::string::npos);
  CHECK(json.find("\"count\": 16") != std::string::npos);
}
