#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "pam/lattice.hpp"
#include "pam/special.hpp"
#include "pam/stats.hpp"

using namespace pam;

namespace {
LatticeSpec small_lattice(int n = 16, double L = 4.0) {
  LatticeSpec s;
  s.d = 3;
  s.n = n;
  s.box_length = L;
  return s;
}
}  // namespace

TEST_CASE("lattice spec validation and geometry") {
  LatticeSpec bad = small_lattice(12);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  LatticeSpec s = small_lattice();
  CHECK(s.cell() == doctest::Approx(0.25));
  CHECK(s.size() == 4096);
  // min image: index (15,0,0) is one cell to the left of the origin
  CHECK(s.min_image_radius(15 * 16 * 16) == doctest::Approx(0.25));
  CHECK(s.min_image_radius(8 * 16 * 16) == doctest::Approx(2.0));
}

TEST_CASE("mollified kernels on the lattice") {
  ModelParams params(3, 0.4);
  LatticeSpec s = small_lattice();
  CHECK_THROWS_AS(build_kernels(params, 0.3, s),  // cell = 0.25 >= eps/2
                  std::invalid_argument);

  const double eps = 0.6;
  const auto K = build_kernels(params, eps, s);

  // g^eps formula pointwise (cap against the pure power)
  const double c7 = riesz_constant(3);
  for (std::size_t i : {0ul, 1ul, 100ul, 2000ul}) {
    const double r = s.min_image_radius(i);
    const double expect =
        r == 0.0 ? 1.0 / eps
                 : std::min(c7 * std::pow(r, -2.5), 1.0 / eps);
    CHECK(K.g_lattice[i] == doctest::Approx(expect));
  }

  // h(0) equals the lattice sum of g^2 cell^d
  KahanSum g2;
  for (Eigen::Index i = 0; i < K.g_lattice.size(); ++i)
    g2.add(K.g_lattice[i] * K.g_lattice[i]);
  CHECK(K.h0 ==
        doctest::Approx(g2.value() * s.cell_volume()).epsilon(1e-10));

  // spectrum |g_hat|^2 >= 0 enters the synthesis
  for (Eigen::Index i = 0; i < K.h_hat.size(); ++i) CHECK(K.h_hat[i] >= 0.0);

  // free-space h^eps against an independent 3-d Riemann sum oracle
  {
    const double eps2 = 0.6, step = 0.1, box = 10.0;
    const int n = static_cast<int>(box / step);
    auto gv = [&](double x, double y, double z) {
      const double rr = std::sqrt(x * x + y * y + z * z);
      return std::min(c7 * std::pow(rr, -2.5), 1.0 / eps2);
    };
    const double r0 = 1.0;
    double brute = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double x = (i - n / 2) * step + 0.5 * step;
          const double y = (j - n / 2) * step + 0.5 * step;
          const double z = (k - n / 2) * step + 0.5 * step;
          brute += gv(x, y, z) * gv(r0 - x, y, z);
        }
    brute *= step * step * step;
    CHECK(h_eps_free(3, eps2, r0, 1e-8) ==
          doctest::Approx(brute).epsilon(0.02));
  }

  // h^eps(r) r^2 increases monotonically toward 1 as eps shrinks (the
  // approach is slow, ~ sqrt(r_cap/r); only the trend is asserted)
  double prev_ratio = 0.0;
  for (double e : {0.6, 0.3, 0.15, 0.075}) {
    const double ratio = h_eps_free(3, e, 1.0, 1e-8);
    CHECK(ratio > prev_ratio);
    CHECK(ratio <= 1.0 + 1e-9);
    prev_ratio = ratio;
  }

  // monotonicity in eps: smaller eps has a larger kernel
  const auto K2 = build_kernels(params, 0.8, s);
  for (std::size_t i : {0ul, 5ul, 333ul})
    CHECK(K.h_lattice[i] >= K2.h_lattice[i] - 1e-12);
  for (int i = 0; i < K.h_free.radii.size(); ++i)
    CHECK(K.h_free.values[i] >=
          h_eps_free(3, 0.8, K.h_free.radii[i], 1e-7) - 1e-9);
}

TEST_CASE("radial kernel interpolation") {
  RadialKernel k;
  k.radii.resize(3);
  k.values.resize(3);
  k.radii << 0.1, 1.0, 10.0;
  k.values << 100.0, 1.0, 0.01;  // r^-2
  CHECK(k(0.05) == doctest::Approx(100.0));
  CHECK(k(0.5) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(k(20.0) == doctest::Approx(0.0025).epsilon(1e-10));
}

TEST_CASE("noise increments have the built covariance") {
  ModelParams params(3, 0.4);
  LatticeSpec s = small_lattice();
  const auto K = build_kernels(params, 0.6, s, false);
  const double dt = 0.01;

  const std::vector<std::vector<int>> lags = {
      {0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {4, 0, 0}, {-4, 0, 0}, {0, 0, 11}};
  const auto rows =
      empirical_covariance_stream(K, dt, 400, lags, {101, stream::kNoise});
  for (const auto& row : rows) {
    CHECK(std::abs(row.estimate - row.expected) <= 4.0 * row.std_error);
  }
  // +-r symmetry of the expected (periodized) covariance
  CHECK(rows[3].expected == doctest::Approx(rows[4].expected));
  // lag 0 is h(0) dt
  CHECK(rows[0].expected == doctest::Approx(K.h0 * dt));

  // beyond L/2 the expectation is the folded periodic kernel: lag 11 on a
  // 16-cell axis is the same as lag 5, and differs from the raw free kernel
  CHECK(K.h_lattice[11] == doctest::Approx(K.h_lattice[5]).epsilon(1e-12));
  CHECK(rows[5].expected == doctest::Approx(dt * K.h_lattice[11]));
}

TEST_CASE("noise scaling in dt and independence across increments") {
  ModelParams params(3, 0.3);
  LatticeSpec s = small_lattice();
  const auto K = build_kernels(params, 0.7, s, false);

  // variance ratio 4 between dt and 4 dt
  Spectral ws(s);
  const int n_inc = 300;
  std::vector<double> v1(n_inc), v4(n_inc), cross(n_inc / 2);
  Field prev;
  for (int j = 0; j < n_inc; ++j) {
    Philox g1(55, 1, j), g4(55, 2, j);
    fill_noise_increment(K, 0.01, g1, ws);
    Field f1(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f1[i] = ws.real_buf()[i];
    v1[j] = f1.square().mean();
    fill_noise_increment(K, 0.04, g4, ws);
    Field f4(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f4[i] = ws.real_buf()[i];
    v4[j] = f4.square().mean();
    if (j % 2 == 1) cross[j / 2] = (f1 * prev).mean();
    prev = f1;
  }
  const auto e1 = reduce_samples(v1), e4 = reduce_samples(v4);
  CHECK(e4.mean / e1.mean ==
        doctest::Approx(4.0).epsilon(5.0 * (e1.std_error / e1.mean +
                                            e4.std_error / e4.mean)));
  const auto ec = reduce_samples(cross);
  CHECK(std::abs(ec.mean) <= 3.0 * ec.std_error);
}

TEST_CASE("covariance estimator needs enough increments") {
  ModelParams params(3, 0.3);
  LatticeSpec s = small_lattice();
  const auto K = build_kernels(params, 0.7, s, false);
  CHECK_THROWS_AS(
      empirical_covariance_stream(K, 0.01, 50, {{0, 0, 0}}, {1, 1}),
      std::invalid_argument);
}

TEST_CASE("streamed and in-memory covariance agree bit for bit") {
  ModelParams params(3, 0.3);
  LatticeSpec s = small_lattice();
  const auto K = build_kernels(params, 0.7, s, false);
  const double dt = 0.02;
  const std::vector<std::vector<int>> lags = {{0, 0, 0}, {2, 0, 0}};

  std::vector<NoiseIncrement> incs;
  for (int j = 0; j < 120; ++j) {
    Philox g(77, stream::kNoise, j);
    incs.push_back(sample_noise_increment(K, dt, g));
  }
  const auto a = empirical_covariance(K, incs, lags);
  const auto b =
      empirical_covariance_stream(K, dt, 120, lags, {77, stream::kNoise});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].estimate == b[i].estimate);
    CHECK(a[i].std_error == b[i].std_error);
  }
}

TEST_CASE("field snapshots round-trip") {
  LatticeSpec s = small_lattice(8, 2.0);
  Field f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = std::sin(0.1 * i);
  const std::string path = "/tmp/pam_test_snapshot.bin";
  write_field_snapshot(path, s, f, 0.125, 0.5);
  LatticeSpec s2;
  double dt = 0, eps = 0;
  const Field g = read_field_snapshot(path, &s2, &dt, &eps);
  CHECK(s2.n == 8);
  CHECK(s2.box_length == 2.0);
  CHECK(dt == 0.125);
  CHECK(eps == 0.5);
  CHECK((f - g).abs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}
