#include <vector>

#include "doctest.h"
#include "pam/rng.hpp"
#include "pam/stats.hpp"

using namespace pam;

TEST_CASE("reduce_samples basics") {
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  auto e = reduce_samples(xs);
  CHECK(e.mean == doctest::Approx(2.5));
  // sd = sqrt(5/3), se = sd/2
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(e.n_samples == 4);
}

TEST_CASE("ks statistic against hand-counted example") {
  // a = {1,2,3}, b = {1.5, 2.5}: F_a-F_b is 1/3 on [1,1.5), 1/6 on
  // [1.5,2), 1/6 on [2,2.5), -1/3 on [2.5,3); sup = 1/3
  std::vector<double> a = {1, 2, 3}, b = {1.5, 2.5};
  CHECK(ks_statistic(a, b) == doctest::Approx(1.0 / 3.0));
  std::vector<double> same = {1, 2, 3};
  CHECK(ks_statistic(same, same) == doctest::Approx(0.0));
}

TEST_CASE("ks critical value formula") {
  // c(0.01) = sqrt(-ln(0.005)/2)
  const double c = std::sqrt(-0.5 * std::log(0.005));
  CHECK(ks_critical_value(0.01, 2000, 2000) ==
        doctest::Approx(c * std::sqrt(2.0 / 2000.0)));
}

TEST_CASE("ks null calibration: same-law ensembles rarely reject") {
  int rejects = 0;
  const int reps = 200, n = 400;
  for (int rep = 0; rep < reps; ++rep) {
    Philox g1(99, 50, 2 * rep), g2(99, 50, 2 * rep + 1);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = g1.next_normal();
    for (auto& v : b) v = g2.next_normal();
    if (ks_statistic(a, b) > ks_critical_value(0.05, n, n)) ++rejects;
  }
  // 5% nominal level: binomial(200, 0.05), mean 10, sd ~3.1
  CHECK(rejects <= 23);
}

TEST_CASE("line fit recovers a slope") {
  std::vector<double> x = {0, 1, 2, 3}, y = {1.0, 3.0, 5.0, 7.0};
  auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
}
