#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pam/params.hpp"
#include "pam/rng.hpp"
#include "pam/stats.hpp"

namespace pam {

using Point = Eigen::VectorXd;

// Discretized bridge on a uniform grid; endpoints pinned bit-exactly.
struct BridgePath {
  Eigen::VectorXd times;      // 0 = t_0 < ... < t_m = t
  Eigen::MatrixXd positions;  // (m+1) x d
};

// Exact finite-dimensional bridge marginals by forward Gaussian
// conditioning:
//   X_{i+1} | X_i ~ N( X_i + (end - X_i) dt/(T - t_i),
//                      dt (T - t_{i+1})/(T - t_i) I ).
BridgePath sample_brownian_bridge(int d, const Point& start, const Point& end,
                                  double t, int m, SeedStream seed,
                                  std::uint64_t path_index = 0);

// E[exp(eta int_0^t ds/|X_s|^2)] over Brownian bridges from start to end,
// trapezoidal in time with the integrand capped at `clip`.
MCEstimate exp_functional_mc(int d, double eta, const Point& start,
                             const Point& end, double t, int m,
                             std::size_t n_paths, double clip, SeedStream seed,
                             int workers = 1);

// Bessel-bridge moment by endpoint binning: d-dimensional Brownian motion
// from a*e1, paths kept when |X_t| lands in [b-delta, b+delta]; conditional
// mean of exp(eta int ds/|X_s|^2) over the kept paths. Converges to
// bridge_exp_moment_exact as delta -> 0, m -> infinity.
struct BinnedEstimate {
  MCEstimate estimate;       // over the paths that hit the bin
  std::size_t n_total = 0;   // paths simulated
  double bin_probability = 0.0;  // empirical
};
BinnedEstimate bessel_binned_exp_moment(int d, double eta, double a, double b,
                                        double bin_halfwidth, double t, int m,
                                        std::size_t n_paths, SeedStream seed,
                                        int workers = 1);

// E[exp(sum_{j<k} kappa^2 int_0^t ds/|X^j_s - X^k_s|^2)] over n independent
// bridges; the integrand of each pair is capped at `clip`.
MCEstimate pair_interaction_mc(const ModelParams& params,
                               const std::vector<Point>& starts,
                               const std::vector<Point>& ends, double t, int m,
                               std::size_t n_paths, double clip,
                               SeedStream seed, int workers = 1);

// Per-path values (exported so callers can do kurtosis diagnostics and
// Richardson extrapolation without rerunning).
std::vector<double> exp_functional_samples(int d, double eta,
                                           const Point& start,
                                           const Point& end, double t, int m,
                                           std::size_t n_paths, double clip,
                                           SeedStream seed, int workers,
                                           double* clip_fraction);

}  // namespace pam
