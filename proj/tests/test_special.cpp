#include <cmath>

#include "doctest.h"
#include "pam/params.hpp"
#include "pam/quadrature.hpp"
#include "pam/special.hpp"

using namespace pam;

TEST_CASE("alpha_of_eta exact points and window") {
  CHECK(alpha_of_eta(3, 0.0) == doctest::Approx(0.0));
  CHECK(alpha_of_eta(3, 0.125) == doctest::Approx(0.5));
  CHECK(alpha_of_eta(3, 0.08) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_of_eta(3, 0.13), std::domain_error);
  CHECK_THROWS_AS(alpha_of_eta(3, -0.01), std::domain_error);

  // strictly increasing in eta
  double prev = -1.0;
  for (int i = 0; i <= 40; ++i) {
    const double a = alpha_of_eta(3, 0.125 * i / 40.0);
    CHECK(a > prev);
    prev = a;
  }

  // consistency with the model coupling: alpha(kappa^2/2) == alpha
  ModelParams p(3, 0.4);
  CHECK(p.alpha == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(alpha_of_eta(p.d, p.eta()) == doctest::Approx(p.alpha).epsilon(1e-13));
  CHECK_THROWS_AS(ModelParams(3, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(3, 0.5), std::invalid_argument);
}

TEST_CASE("heat kernel value, normalization, scaling") {
  // (2 pi)^{-3/2}
  CHECK(heat_kernel(3, 1.0, 0.0) ==
        doctest::Approx(0.0634936359342410).epsilon(1e-12));
  CHECK_THROWS_AS(heat_kernel(3, 0.0, 1.0), std::domain_error);

  // radial normalization: int q^{(d)}_t(a->0 chi) == int G over R^d
  auto one = [](double) { return 1.0; };
  for (int d : {3, 4, 5}) {
    const double total = radial_gaussian_integral(d, 1.0, 0.0, one);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-7));
  }

  // Gaussian scaling G_{2t}(x) = 2^{-d/2} G_t(x/sqrt(2))
  for (double r2 : {0.0, 0.3, 2.0}) {
    CHECK(heat_kernel(3, 2.0, r2) ==
          doctest::Approx(heat_kernel(3, 1.0, r2 / 2.0) *
                          std::pow(2.0, -1.5)));
  }
}

TEST_CASE("bessel I against high-precision references") {
  // frozen from an arbitrary-precision evaluation of log I_nu(z)
  struct Ref {
    double nu, z, logi;
  };
  const Ref refs[] = {
      {0, 0.001, 2.4999998437500174e-7},
      {0, 0.5, 0.061549719185481304},
      {0, 1, 0.23591435850717865},
      {0, 5, 3.3046817758225334},
      {0, 10, 7.9429720831186956},
      {0, 25, 22.476728004999244},
      {0, 50, 47.127575501871805},
      {0.3, 0.001, -2.17209573604708},
      {0.3, 0.5, -0.26012950844290218},
      {0.3, 1, 0.085071533307623837},
      {0.3, 5, 3.2944319454705952},
      {0.3, 10, 7.9382180864719895},
      {0.3, 25, 22.474890359162645},
      {0.3, 50, 47.126666303161756},
      {0.5, 0.001, -3.6796688254691348},
      {0.5, 0.5, -0.53104008831178198},
      {0.5, 1, -0.064351991073531799},
      {0.5, 5, 3.2762971096179066},
      {0.5, 10, 7.9297689182371508},
      {0.5, 25, 22.471623554361227},
      {0.5, 50, 47.125049964081254},
      {1, 0.001, -7.600902334542085},
      {1, 0.5, -1.3552054470253345},
      {1, 1, -0.57064798749083128},
      {1, 5, 3.1919420305456755},
      {1, 10, 7.8902038341042123},
      {1, 25, 22.456312472475349},
      {1, 50, 47.117473616587127},
      {1.5, 0.001, -11.686036459786044},
      {1.5, 0.5, -2.3392130423923243},
      {1.5, 1, -1.2257913526447274},
      {1.5, 5, 3.0532670568400185},
      {1.5, 10, 7.8244084071596659},
      {1.5, 25, 22.430801559840972},
      {1.5, 50, 47.104847256763735},
      {2.7, 0.001, -21.950508899861443},
      {2.7, 0.5, -5.154205445338092},
      {2.7, 1, -3.2324802967590802},
      {2.7, 5, 2.5128972672877265},
      {2.7, 10, 7.560916936010842},
      {2.7, 25, 22.328037012031189},
      {2.7, 50, 47.053948998772801},
  };
  for (const auto& r : refs) {
    CHECK(log_bessel_i(r.nu, r.z) ==
          doctest::Approx(r.logi).epsilon(1e-11));
  }

  // half-integer closed form I_{1/2}(z) = sqrt(2/(pi z)) sinh z
  CHECK(bessel_i(0.5, 1.0) ==
        doctest::Approx(std::sqrt(2.0 / M_PI) * std::sinh(1.0))
            .epsilon(1e-12));

  // leading asymptotics I_0(30) ~ e^30/sqrt(2 pi 30)
  CHECK(bessel_i(0.0, 30.0) * std::sqrt(2.0 * M_PI * 30.0) * std::exp(-30.0) ==
        doctest::Approx(1.0).epsilon(0.01));

  // I_nu(0) = 0 for nu > 0
  CHECK(bessel_i(1.3, 0.0) == 0.0);
  CHECK(bessel_i(0.0, 0.0) == 1.0);

  // continuity across the series/asymptotic switchover
  for (double nu : {0.0, 0.5, 1.2}) {
    const double z = nu + 20.0;
    CHECK(log_bessel_i(nu, z - 1e-9) ==
          doctest::Approx(log_bessel_i(nu, z + 1e-9)).epsilon(1e-9));
  }
}

TEST_CASE("bessel transition density") {
  // half-integer closed form for d=3:
  // q = b/(a sqrt(2 pi t)) (exp(-(a-b)^2/2t) - exp(-(a+b)^2/2t))
  auto q3 = [](double t, double a, double b) {
    return b / (a * std::sqrt(2.0 * M_PI * t)) *
           (std::exp(-0.5 * (a - b) * (a - b) / t) -
            std::exp(-0.5 * (a + b) * (a + b) / t));
  };
  CHECK(bessel_transition_density(3, 1, 1, 1) ==
        doctest::Approx(q3(1, 1, 1)).epsilon(1e-12));
  CHECK(bessel_transition_density(3, 1, 1, 1) ==
        doctest::Approx(0.34495131388824463).epsilon(1e-12));
  for (double t : {0.5, 2.0})
    for (double a : {0.3, 1.5})
      for (double b : {0.2, 2.5})
        CHECK(bessel_transition_density(3, t, a, b) ==
              doctest::Approx(q3(t, a, b)).epsilon(1e-11));

  CHECK_THROWS_AS(bessel_transition_density(3, -1, 1, 1), std::domain_error);
  CHECK_THROWS_AS(bessel_transition_density(3, 1, 0, 1), std::domain_error);

  // normalization in b for d in {3,4,5}, t in {0.5,1,2}, a in {0.5,1,2}
  for (int d : {3, 4, 5})
    for (double t : {0.5, 1.0, 2.0})
      for (double a : {0.5, 1.0, 2.0}) {
        auto one = [](double) { return 1.0; };
        CHECK(radial_gaussian_integral(d, t, a, one) ==
              doctest::Approx(1.0).epsilon(1e-6));
      }
}

TEST_CASE("chapman-kolmogorov for the radial density") {
  // int q_s(a,r) q_{t-s}(r,b) dr == q_t(a,b), spot-checked on a 3^3 grid
  for (int d : {3, 4, 5})
    for (double a : {0.5, 1.0, 2.0})
      for (double b : {0.5, 1.0, 2.0}) {
        const double t = 1.0, s = 0.4;
        auto f = [&](double r) {
          return std::exp(log_bessel_transition_density(d, t - s, r, b));
        };
        const double composed = radial_gaussian_integral(d, s, a, f, 1e-11);
        CHECK(composed == doctest::Approx(bessel_transition_density(d, t, a, b))
                              .epsilon(1e-5));
      }
}

TEST_CASE("bridge exponential moment exact") {
  // eta = 0 is the identity case, no cancellation
  CHECK(bridge_exp_moment_exact(3, 0.0, 0.7, 1.9, 2.3) == 1.0);

  // frozen arbitrary-precision references
  CHECK(bridge_exp_moment_exact(3, 0.1, 1, 1, 1) ==
        doctest::Approx(1.2175696020780665).epsilon(1e-12));
  CHECK(bridge_exp_moment_exact(3, 0.1, 0.5, 2, 0.7) ==
        doctest::Approx(1.1365053128730951).epsilon(1e-12));
  CHECK(bridge_exp_moment_exact(4, 0.3, 1, 1.5, 2) ==
        doctest::Approx(1.6222603623416855).epsilon(1e-12));
  CHECK(bridge_exp_moment_exact(5, 1.0, 2, 0.3, 1.3) ==
        doctest::Approx(6.5917511522329468).epsilon(1e-12));

  // Brownian scaling invariance (a,b,t) -> (ca, cb, c^2 t)
  for (double c : {0.5, 2.0}) {
    CHECK(bridge_exp_moment_exact(3, 0.1, c * 1.0, c * 1.3, c * c * 0.8) ==
          doctest::Approx(bridge_exp_moment_exact(3, 0.1, 1.0, 1.3, 0.8))
              .epsilon(1e-12));
  }

  // nondecreasing in eta; always >= 1
  double prev = 0.0;
  for (double eta : {0.0, 0.02, 0.05, 0.08, 0.11, 0.125}) {
    const double v = bridge_exp_moment_exact(3, eta, 0.8, 1.1, 1.0);
    CHECK(v >= 1.0);
    CHECK(v >= prev);
    prev = v;
  }

  // no 0/0 at extreme arguments where both densities underflow
  const double big = bridge_exp_moment_exact(3, 0.1, 100.0, 100.0, 1e-2);
  CHECK(std::isfinite(big));
  CHECK(big >= 1.0);
  CHECK(big == doctest::Approx(1.0).epsilon(1e-6));  // ab/t = 1e6, ratio -> 1
}

TEST_CASE("envelope bound dominates the exact moment") {
  // eta = 0, C = 1: bound is exactly 1
  CHECK(bridge_exp_moment_bound(3, 0.0, 2.0, 3.0, 0.5, 1.0) == 1.0);
  CHECK(bridge_exp_moment_bound(3, 0.1, 0.0, 1.0, 1.0, 1.0) == kInfinity);

  // monotone in t
  CHECK(bridge_exp_moment_bound(3, 0.1, 1, 1, 2.0, 1.0) >
        bridge_exp_moment_bound(3, 0.1, 1, 1, 1.0, 1.0));

  // calibrate C(eta) on the coarse grid, then assert the envelope on a finer
  // one (radial arguments; the Bessel ratio only sees ab/t)
  for (double eta : {0.05, 0.1}) {
    const double c = calibrate_envelope_constant(3, eta);
    CHECK(c >= 1.0);
    CHECK(c < 50.0);
    for (int i = -117; i <= 117; i += 2) {
      const double z = std::pow(10.0, i / 20.0);
      const double exact = bridge_exp_moment_exact(3, eta, 1.0, z, 1.0);
      const double bound =
          bridge_exp_moment_bound(3, eta, 1.0, z, 1.0, 1.0001 * c);
      CHECK(exact <= bound);
    }
  }
}

TEST_CASE("riesz constant: gamma formula vs radial convolution oracle") {
  // d=3 closed form 1/(4 sqrt(pi))
  CHECK(riesz_constant(3) ==
        doctest::Approx(1.0 / (4.0 * std::sqrt(M_PI))).epsilon(1e-12));
  CHECK(riesz_constant(4) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));

  // defining property: conv of g with itself at |z| in {0.5, 1, 2} times
  // |z|^2 equals 1. The value cap must sit extremely deep: the capped
  // kernel's convolution deficit decays only like sqrt(r_cap/|z|).
  for (int d : {3, 4}) {
    const double c7 = riesz_constant(d);
    const double eps = 1e-16;
    auto g = [&](double w) {
      return std::min(c7 * std::pow(w, -0.5 * (d + 2)), 1.0 / eps);
    };
    for (double r : {0.5, 1.0, 2.0}) {
      const double conv = radial_self_convolution(d, r, g, 64.0 * r, 1e-9);
      CHECK(conv * r * r == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("gaussian convolution bound (smoothed riesz kernel)") {
  auto z = gaussian_convolution_bound_check(3, 0.0, 1.0, 2.0);
  CHECK(z.lhs == 1.0);

  // closed form for d=3, r=1: E|x + sqrt(2t) Z|^{-1} = erf(|x|/(2 sqrt(t)))/|x|
  auto c = gaussian_convolution_bound_check(3, 1.0, 0.5, 1.0);
  CHECK(c.lhs == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-9));
  CHECK(c.rhs_envelope == doctest::Approx(1.0));

  // concentration: |x-y| -> infinity at fixed t
  auto far = gaussian_convolution_bound_check(3, 1.0, 1.0, 50.0);
  CHECK(far.lhs * 50.0 == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(gaussian_convolution_bound_check(3, 3.0, 1.0, 1.0),
                  std::domain_error);

  // fit C(r) on a coarse grid then assert lhs <= C(r) envelope on a finer one
  for (double r : {0.5, 1.0, 2.0}) {
    double cfit = 0.0;
    for (double dist : {0.1, 1.0, 10.0})
      for (double t : {0.1, 1.0, 10.0}) {
        auto v = gaussian_convolution_bound_check(3, r, t, dist);
        cfit = std::max(cfit, v.lhs / v.rhs_envelope);
      }
    CHECK(std::isfinite(cfit));
    for (double dist : {0.08, 0.3, 0.7, 2.0, 5.0, 12.0})
      for (double t : {0.08, 0.3, 0.7, 2.0, 5.0, 12.0}) {
        auto v = gaussian_convolution_bound_check(3, r, t, dist);
        CHECK(v.lhs <= 1.05 * cfit * v.rhs_envelope);
      }
  }
}
