#pragma once

#include <cstdint>
#include <vector>

#include "pam/chaos.hpp"
#include "pam/lattice.hpp"
#include "pam/moments.hpp"
#include "pam/params.hpp"
#include "pam/report.hpp"
#include "pam/spde.hpp"
#include "pam/testfunc.hpp"

namespace pam {

// Ensemble of independent trajectories; one substream per run, results in
// slot order so worker count never changes the output.
std::vector<Observables> run_spde_ensemble(
    const ModelParams& params, const MeasureSpec& mu,
    const LatticeKernels& kernels, double t_end, double dt,
    const ObservablesConfig& obs, SeedStream seed, std::size_t n_runs,
    int workers);

struct DualityConfig {
  TestFunction f_init;  // initial density of u, tested by v
  TestFunction g_test;  // initial density of v, tested by u
  double t = 0.5;
  double dt = 0.0;  // 0 = default
  std::size_t n_ensemble = 2000;
  double ks_level = 0.01;
  double bias_budget = 0.02;  // pre-registered discretization allowance
  int workers = 1;
};
ExperimentReport duality_experiment(const ModelParams& params,
                                    const LatticeKernels& kernels,
                                    const DualityConfig& cfg, SeedStream seed);

struct ScalingConfig {
  double c = 0.5;  // ball radius of the rescaled observation, in (0,1]
  double t = 0.5;
  double intensity = 1.0;
  double dt_ref = 0.0;
  std::size_t n_ensemble = 2000;
  double ks_level = 0.01;
  double bias_budget = 0.03;
  int workers = 1;
  // reference discretization (radius-1 ball); the rescaled run shrinks all
  // lengths by c and times by c^2, keeping resolution per ball radius
  int n_per_side = 32;
  double box_length_ref = 8.0;
  double epsilon_ref = 0.4;
};
ExperimentReport scaling_experiment(const ModelParams& params,
                                    const ScalingConfig& cfg, SeedStream seed);

struct TotalMassConfig {
  double t_end = 1.0;
  double dt = 0.0;
  std::size_t n_ensemble = 2000;
  int workers = 1;
  double bracket_tolerance = 0.10;
};
ExperimentReport total_mass_martingale_check(const ModelParams& params,
                                             const MeasureSpec& mu,
                                             const LatticeKernels& kernels,
                                             const TotalMassConfig& cfg,
                                             SeedStream seed);

struct DeathConfig {
  std::vector<double> t_grid;  // geometric grid
  double dt = 0.0;
  std::size_t n_ensemble = 2000;
  int workers = 1;
  double confidence_z = 2.326;  // 99% one-sided
};
ExperimentReport death_diagnostic(const ModelParams& params,
                                  const MeasureSpec& mu,
                                  const LatticeKernels& kernels,
                                  const DeathConfig& cfg, SeedStream seed);

struct SingularityConfig {
  std::vector<double> radii;  // decreasing ladder
  double t = 0.5;
  double dt = 0.0;
  double intensity = 1.0;
  std::size_t n_ensemble = 500;
  int workers = 1;
  double trend_z = 1.645;       // 95% one-sided
  double slope_tolerance = 0.3; // fitted exponent within 2d - alpha +- tol
};
ExperimentReport singularity_diagnostic(const ModelParams& params,
                                        const LatticeKernels& kernels,
                                        const SingularityConfig& cfg,
                                        SeedStream seed);

struct RhoSupermartingaleConfig {
  double rho = 0.4;
  double tilt_a = 1.0;
  double t_end = 0.5;
  double dt = 0.0;
  std::size_t n_ensemble = 500;
  int workers = 1;
  double trend_z = 1.645;  // 95% one-sided
};
ExperimentReport supermartingale_rho_check(const ModelParams& params,
                                           const MeasureSpec& mu,
                                           const LatticeKernels& kernels,
                                           const RhoSupermartingaleConfig& cfg,
                                           SeedStream seed);

struct LocalExtinctionConfig {
  std::vector<double> t_grid;
  double dt = 0.0;
  double intensity = 1.0;
  Eigen::VectorXd ball_center;
  double ball_radius = 1.0;
  double threshold = 0.0;  // 0 = half the initial ball mass
  std::size_t n_ensemble = 500;
  int workers = 1;
  double trend_z = 1.645;
};
ExperimentReport local_extinction_check(const ModelParams& params,
                                        const LatticeKernels& kernels,
                                        const LocalExtinctionConfig& cfg,
                                        SeedStream seed);

// Same-law calibration of the two-sample KS machinery: `repetitions` pairs
// of ensembles from identical configs, different substreams; the rejection
// count at `level` must stay inside the binomial 99.9% envelope.
ExperimentReport ks_null_calibration(const ModelParams& params,
                                     const LatticeKernels& kernels, double t,
                                     double dt, std::size_t n_ensemble,
                                     int repetitions, double level,
                                     SeedStream seed, int workers);

}  // namespace pam
