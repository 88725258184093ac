#include <cmath>

#include "doctest.h"
#include "pam/chaos.hpp"
#include <limits>
#include "pam/stats.hpp"

using namespace pam;

namespace {
LatticeSpec lat(int n = 16, double L = 4.0) {
  LatticeSpec s;
  s.d = 3;
  s.n = n;
  s.box_length = L;
  return s;
}
Eigen::VectorXd origin() { return Eigen::VectorXd::Zero(3); }

struct Setup {
  ModelParams params{3, 0.4};
  LatticeSpec lattice = lat();
  LatticeKernels kernels = build_kernels(params, 0.7, lattice, false);
  MeasureSpec mu = MeasureSpec::atom_cloud({{origin(), 1.0}}, 0.3);
  TestFunction f = TestFunction::gaussian(origin(), 1.0, 0.45);
  double t = 0.25;
  double dt = 0.25 / 16;
};
}  // namespace

TEST_CASE("order zero is deterministic heat flow") {
  Setup s;
  ChaosRunConfig cfg;
  cfg.max_order = 2;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const auto r1 =
      chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {1, 1}, 0);
  const auto r2 =
      chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {2, 9}, 5);
  CHECK(r1.order_integrals[0](0, 0) ==
        doctest::Approx(r2.order_integrals[0](0, 0)).epsilon(1e-12));
}

TEST_CASE("kappa = 0 collapses all positive orders") {
  Setup s;
  s.params = ModelParams(3, 0.0);
  ChaosRunConfig cfg;
  cfg.max_order = 3;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const auto r =
      chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {3, 1}, 0);
  for (int n = 1; n <= 3; ++n) CHECK(r.order_integrals[n](0, 0) == 0.0);
  for (const auto& term : r.final_terms)
    if (term.order >= 1) CHECK(term.field.abs().maxCoeff() == 0.0);
}

TEST_CASE("orders are centered and mutually orthogonal") {
  Setup s;
  ChaosRunConfig cfg;
  cfg.max_order = 2;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const int n_runs = 3000;
  std::vector<double> i1, i2;
  Spectral ws(s.lattice);
  for (int r = 0; r < n_runs; ++r) {
    const auto res =
        chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {4, 2}, r, &ws);
    i1.push_back(res.order_integrals[1](0, 0));
    i2.push_back(res.order_integrals[2](0, 0));
  }
  const auto e1 = reduce_samples(i1), e2 = reduce_samples(i2);
  CHECK(std::abs(e1.mean) <= 3.0 * e1.std_error);
  CHECK(std::abs(e2.mean) <= 3.0 * e2.std_error);
  const double corr = sample_correlation(i1, i2);
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(n_runs)));
}

TEST_CASE("first-order variance matches the deterministic quadrature") {
  Setup s;
  ChaosRunConfig cfg;
  cfg.max_order = 1;
  cfg.paired_spde = false;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const int n_runs = 4000;
  std::vector<double> i1;
  Spectral ws(s.lattice);
  for (int r = 0; r < n_runs; ++r) {
    const auto res =
        chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {5, 3}, r, &ws);
    i1.push_back(res.order_integrals[1](0, 0));
  }
  const auto est = reduce_samples(i1);
  std::vector<double> sq;
  for (double v : i1) sq.push_back(v * v);
  const auto var_est = reduce_samples(sq);

  const double quad = chaos_l2_norm_quadrature(
      s.params, s.mu, s.f, s.t, 1, s.kernels.h_periodic_radial);
  // MC ensemble is the oracle for the lattice; lattice/time discretization
  // gets a small systematic allowance
  CHECK(std::abs(var_est.mean - quad) <=
        3.0 * var_est.std_error + 0.05 * quad);
}

TEST_CASE("quadrature scales exactly as kappa^2 per order") {
  Setup s;
  const ModelParams p02(3, 0.2), p04(3, 0.4);
  const double v02 = chaos_l2_norm_quadrature(p02, s.mu, s.f, s.t, 1,
                                              s.kernels.h_periodic_radial);
  const double v04 = chaos_l2_norm_quadrature(p04, s.mu, s.f, s.t, 1,
                                              s.kernels.h_periodic_radial);
  CHECK(v04 / v02 == doctest::Approx(4.0).epsilon(1e-10));

  // order 0 has no stochastic content: (int f G_t mu)^2
  const double v0 = chaos_l2_norm_quadrature(p04, s.mu, s.f, s.t, 0,
                                             s.kernels.h_periodic_radial);
  CHECK(v0 > 0.0);
  const double v0b = chaos_l2_norm_quadrature(p02, s.mu, s.f, s.t, 0,
                                              s.kernels.h_periodic_radial);
  CHECK(v0 == doctest::Approx(v0b));
}

TEST_CASE("quadrature is stable under node refinement") {
  Setup s;
  for (int order : {1, 2}) {
    const double coarse = chaos_l2_norm_quadrature(
        s.params, s.mu, s.f, s.t, order, s.kernels.h_periodic_radial, 32, 64);
    const double fine = chaos_l2_norm_quadrature(
        s.params, s.mu, s.f, s.t, order, s.kernels.h_periodic_radial, 64, 128);
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-4));
  }
}

TEST_CASE("partial sums converge to the paired run") {
  Setup s;
  ChaosRunConfig cfg;
  cfg.max_order = 4;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const int n_runs = 1200;
  std::vector<std::vector<double>> resid(cfg.max_order + 1);
  Spectral ws(s.lattice);
  for (int r = 0; r < n_runs; ++r) {
    const auto res =
        chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {6, 4}, r, &ws);
    double partial = 0.0;
    for (int n = 0; n <= cfg.max_order; ++n) {
      partial += res.order_integrals[n](0, 0);
      const double diff = res.spde_integrals(0, 0) - partial;
      resid[n].push_back(diff * diff);
    }
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= cfg.max_order; ++n) {
    const auto est = reduce_samples(resid[n]);
    CHECK(est.mean <= prev + 2.0 * est.std_error);
    prev = est.mean;
  }
  // residual at N=4 well below the solution's second moment
  std::vector<double> usq;
  {
    Spectral ws2(s.lattice);
    for (int r = 0; r < 400; ++r) {
      const auto res = chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg,
                                   {6, 4}, r, &ws2);
      usq.push_back(res.spde_integrals(0, 0) * res.spde_integrals(0, 0));
    }
  }
  CHECK(reduce_samples(resid[4]).mean <= 0.05 * reduce_samples(usq).mean);
}

TEST_CASE("partial_sum_solution validates pairing") {
  Setup s;
  ChaosRunConfig cfg;
  cfg.max_order = 1;
  cfg.times = {s.t};
  cfg.test_functions = {s.f};
  const auto r1 =
      chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {7, 5}, 0);
  const auto r2 =
      chaos_terms(s.params, s.mu, s.kernels, s.t, s.dt, cfg, {7, 5}, 1);
  const Field sum = partial_sum_solution(r1.final_terms, 1);
  CHECK(sum.size() == static_cast<Eigen::Index>(s.lattice.size()));

  std::vector<ChaosTerm> mixed = {r1.final_terms[0], r2.final_terms[1]};
  CHECK_THROWS_AS(partial_sum_solution(mixed, 1), std::invalid_argument);
}
