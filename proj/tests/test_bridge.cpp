#include <cmath>

#include "doctest.h"
#include "pam/bridge.hpp"
#include "pam/quadrature.hpp"
#include "pam/special.hpp"
#include "pam/stats.hpp"

using namespace pam;

namespace {
Point pt(double x, double y, double z) {
  Point p(3);
  p << x, y, z;
  return p;
}
}  // namespace

TEST_CASE("bridge endpoints pinned bit-exactly, grid increasing") {
  const Point a = pt(0.3, -1.0, 2.0), b = pt(-0.5, 0.25, 1.0);
  const auto path = sample_brownian_bridge(3, a, b, 2.0, 16, {7, 1}, 42);
  CHECK(path.positions.row(0) == a.transpose());
  CHECK(path.positions.row(16) == b.transpose());
  for (int i = 0; i < 16; ++i) CHECK(path.times[i + 1] > path.times[i]);
  CHECK_THROWS_AS(sample_brownian_bridge(3, a, b, 1.0, 1, {7, 1}, 0),
                  std::invalid_argument);
}

TEST_CASE("bridge marginal mean and variance at mid-time") {
  const Point a = pt(1.0, 0.0, 0.0), b = pt(-1.0, 2.0, 0.5);
  const double t = 2.0;
  const int m = 8, mid = 4;
  const int n = 100000;
  std::vector<double> xs[3];
  for (int c = 0; c < 3; ++c) xs[c].resize(n);
  for (int i = 0; i < n; ++i) {
    const auto path = sample_brownian_bridge(3, a, b, t, m, {11, 2}, i);
    for (int c = 0; c < 3; ++c) xs[c][i] = path.positions(mid, c);
  }
  // mean (a+b)/2, per-coordinate variance s(t-s)/t = 0.5 at s = 1
  for (int c = 0; c < 3; ++c) {
    const auto est = reduce_samples(xs[c]);
    CHECK(std::abs(est.mean - 0.5 * (a[c] + b[c])) < 4.0 * est.std_error);
    double var = 0.0;
    for (double v : xs[c]) var += (v - est.mean) * (v - est.mean);
    var /= n - 1;
    CHECK(var == doctest::Approx(0.5).epsilon(0.02));
  }
}

TEST_CASE("exponential functional trivial and degenerate cases") {
  const Point a = pt(1, 0, 0), b = pt(0, 1, 0);
  const auto est = exp_functional_mc(3, 0.0, a, b, 1.0, 64, 100, 1e4, {3, 3});
  CHECK(est.mean == 1.0);
  CHECK(est.std_error == 0.0);

  CHECK_THROWS_AS(exp_functional_mc(3, 0.1, pt(0, 0, 0), pt(0, 0, 0), 1.0, 64,
                                    10, 1e4, {3, 3}),
                  std::invalid_argument);
}

TEST_CASE("far-from-origin bridges follow the straight line") {
  // |x| = |y| = 10: the functional concentrates on the deterministic path
  const Point a = 10.0 * pt(1, 0, 0).normalized(), b = 10.0 * pt(0, 1, 0);
  const double t = 1.0, eta = 0.1;
  auto line_integrand = [&](double s) {
    const Point x = a + s / t * (b - a);
    return 1.0 / x.squaredNorm();
  };
  const double line_val =
      std::exp(eta * adaptive_simpson(line_integrand, 0.0, t, 1e-12));
  const auto est =
      exp_functional_mc(3, eta, a, b, t, 512, 20000, 1e6, {17, 4});
  CHECK(est.mean == doctest::Approx(line_val).epsilon(0.01));
}

TEST_CASE("clipped functional is monotone in the cap") {
  // endpoints pass near the origin so the clip actually bites
  const Point a = pt(0.25, 0, 0), b = pt(-0.25, 0, 0);
  double prev = 0.0;
  for (double clip : {1e2, 1e3, 1e4}) {
    const auto est =
        exp_functional_mc(3, 0.1, a, b, 1.0, 512, 20000, clip, {23, 5});
    CHECK(est.mean >= prev - 3.0 * est.std_error);
    CHECK(est.clip_fraction > 0.0);
    prev = est.mean;
  }
}

TEST_CASE("bridge functional against an endpoint-binned free motion oracle") {
  // E^{bridge x->y}[exp(eta int ds/|X|^2)] equals the ball-binned estimate
  // E_x[exp(...) 1(X_t in B(y,r))] / P(X_t in B(y,r)) as r -> 0
  const int d = 3;
  const double eta = 0.1, t = 1.0;
  const Point x = pt(1, 0, 0), y = pt(1.2, 0, 0);
  const double ball_r = 0.22;

  // binned side: free Brownian paths, conditional mean over endpoint hits
  const std::size_t n_free = 400000;
  const int m = 256;
  std::vector<double> hits;
  Philox base(31, 77, 0);
  for (std::size_t i = 0; i < n_free; ++i) {
    Philox g(31, 77, i);
    Point p = x;
    const double sd = std::sqrt(t / m);
    double acc = 0.5 / p.squaredNorm();
    for (int k = 0; k < m; ++k) {
      for (int c = 0; c < d; ++c) p[c] += sd * g.next_normal();
      const double inv = 1.0 / p.squaredNorm();
      acc += (k == m - 1) ? 0.5 * inv : inv;
    }
    if ((p - y).norm() <= ball_r) hits.push_back(std::exp(eta * acc * t / m));
  }
  REQUIRE(hits.size() > 500);
  const auto binned = reduce_samples(hits);

  // bridge side with Richardson extrapolation in m
  const auto e1 =
      exp_functional_mc(d, eta, x, y, t, 256, 200000, 1e6, {31, 78});
  const auto e2 =
      exp_functional_mc(d, eta, x, y, t, 512, 200000, 1e6, {31, 79});
  const double rich = 2.0 * e2.mean - e1.mean;
  const double se = std::sqrt(4.0 * e2.std_error * e2.std_error +
                              e1.std_error * e1.std_error +
                              binned.std_error * binned.std_error);
  // ball-binning bias enters the tolerance as an extra r^2-sized term
  CHECK(std::abs(rich - binned.mean) <
        3.0 * se + 0.02 * binned.mean * ball_r * ball_r);
}

TEST_CASE("bridge functional sits under the calibrated envelope") {
  const double eta = 0.1;
  const double c_eta = calibrate_envelope_constant(3, eta);
  const Point x = pt(1, 0, 0), y = pt(0.2, 0.9, 0);
  const auto est =
      exp_functional_mc(3, eta, x, y, 1.0, 256, 20000, 1e5, {37, 6});
  const double bound =
      bridge_exp_moment_bound(3, eta, x.norm(), y.norm(), 1.0, c_eta);
  CHECK(est.mean - 3.0 * est.std_error <= bound);
}

TEST_CASE("kurtosis of the exponential functional stays sane in-window") {
  // the fourth moment of exp(eta int ds/|X|^2) exists only for
  // 4 eta <= (d-2)^2/8; test inside that window (tail index > 4)
  const Point x = pt(1, 0, 0), y = pt(0, 1, 0);
  double cf = 0.0;
  auto vals = exp_functional_samples(3, 0.02, x, y, 1.0, 256, 20000, 1e6,
                                     {41, 7}, 1, &cf);
  CHECK(sample_kurtosis(vals) < 100.0);

  // at eta = 0.05 the variance is still finite: split-half standard errors
  // must agree to within a factor ~2
  auto v2 = exp_functional_samples(3, 0.05, x, y, 1.0, 256, 40000, 1e6,
                                   {41, 8}, 1, &cf);
  std::vector<double> h1(v2.begin(), v2.begin() + 20000);
  std::vector<double> h2(v2.begin() + 20000, v2.end());
  const double se1 = reduce_samples(h1).std_error;
  const double se2 = reduce_samples(h2).std_error;
  CHECK(se1 / se2 > 0.4);
  CHECK(se1 / se2 < 2.5);
}

TEST_CASE("bessel binned endpoint estimator") {
  // eta = 0 gives exactly 1 on every kept path
  const auto null_est =
      bessel_binned_exp_moment(3, 0.0, 1.0, 1.0, 0.1, 1.0, 64, 5000, {43, 8});
  CHECK(null_est.estimate.mean == doctest::Approx(1.0));

  // d=3, eta=0.1, a=b=t=1: exact value from the Bessel ratio
  const double exact = bridge_exp_moment_exact(3, 0.1, 1, 1, 1);
  const auto est = bessel_binned_exp_moment(3, 0.1, 1.0, 1.0, 0.05, 1.0, 512,
                                            300000, {43, 9}, 1);
  CHECK(est.estimate.mean == doctest::Approx(exact).epsilon(0.02));

  // delta ladder: bias shrinks within combined noise
  const auto coarse = bessel_binned_exp_moment(3, 0.1, 1.0, 1.0, 0.2, 1.0,
                                               512, 150000, {43, 10});
  const auto fine = bessel_binned_exp_moment(3, 0.1, 1.0, 1.0, 0.05, 1.0, 512,
                                             150000, {43, 11});
  const double bias_coarse = std::abs(coarse.estimate.mean - exact);
  const double bias_fine = std::abs(fine.estimate.mean - exact);
  const double slack = 2.5 * std::sqrt(coarse.estimate.std_error *
                                           coarse.estimate.std_error +
                                       fine.estimate.std_error *
                                           fine.estimate.std_error);
  CHECK(bias_fine <= bias_coarse + slack);

  CHECK_THROWS_AS(bessel_binned_exp_moment(3, 0.1, 1.0, 40.0, 0.01, 0.01, 8,
                                           50, {43, 12}),
                  std::runtime_error);  // nothing lands in the bin
}

TEST_CASE("pair interaction reductions") {
  // kappa = 0: exactly one
  ModelParams null_params(3, 0.0);
  std::vector<Point> s2 = {pt(1, 0, 0), pt(-1, 0, 0)};
  std::vector<Point> e2 = {pt(0, 1, 0), pt(0, -1, 0)};
  const auto z = pair_interaction_mc(null_params, s2, e2, 1.0, 32, 50, 1e4,
                                     {47, 1});
  CHECK(z.mean == doctest::Approx(1.0));
  CHECK(z.std_error == doctest::Approx(0.0));

  // n=2 equivalence with the difference bridge at eta = kappa^2/2
  ModelParams params(3, 0.4);
  const auto pair_est =
      pair_interaction_mc(params, s2, e2, 1.0, 512, 40000, 5e3, {47, 2});
  const Point ds = (s2[0] - s2[1]) / std::sqrt(2.0);
  const Point de = (e2[0] - e2[1]) / std::sqrt(2.0);
  // clip c on 1/|X1-X2|^2 corresponds to 2c on the difference-bridge
  // integrand 1/|B|^2 (then scaled by eta = kappa^2/2)
  const auto diff_est = exp_functional_mc(3, params.eta(), ds, de, 1.0, 512,
                                          40000, 1e4, {47, 3});
  const double se = std::sqrt(pair_est.std_error * pair_est.std_error +
                              diff_est.std_error * diff_est.std_error);
  CHECK(std::abs(pair_est.mean - diff_est.mean) <= 3.0 * se);

  // n=3 Holder bound with exponent n(n-1)
  ModelParams small(3, 0.15);
  std::vector<Point> s3 = {pt(1, 0, 0), pt(-0.5, 0.8, 0), pt(-0.5, -0.8, 0)};
  std::vector<Point> e3 = {pt(0.9, 0.3, 0), pt(-0.6, 0.7, 0.2),
                           pt(-0.4, -0.9, -0.1)};
  const auto triple =
      pair_interaction_mc(small, s3, e3, 1.0, 256, 20000, 1e4, {47, 4});
  const double eta_in = 3.0 * 2.0 * small.kappa * small.kappa / 2.0;
  double bound = 1.0;
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs) {
    const Point dss = (s3[pr[0]] - s3[pr[1]]) / std::sqrt(2.0);
    const Point dee = (e3[pr[0]] - e3[pr[1]]) / std::sqrt(2.0);
    const auto inner = exp_functional_mc(3, eta_in, dss, dee, 1.0, 256, 20000,
                                         1e4, {47, 5});
    bound *= std::pow(inner.mean, 1.0 / 6.0);
  }
  CHECK(triple.mean <= bound * (1.0 + 0.05));
}

TEST_CASE("determinism: worker count never changes the estimate") {
  const Point x = pt(1, 0, 0), y = pt(0, 1, 0);
  const auto w1 =
      exp_functional_mc(3, 0.1, x, y, 1.0, 128, 20000, 1e4, {53, 1}, 1);
  const auto w4 =
      exp_functional_mc(3, 0.1, x, y, 1.0, 128, 20000, 1e4, {53, 1}, 4);
  CHECK(w1.mean == w4.mean);
  CHECK(w1.std_error == w4.std_error);
  CHECK(w1.clip_fraction == w4.clip_fraction);
}
