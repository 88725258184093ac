#pragma once

#include <Eigen/Core>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/params.hpp"
#include "pam/spde.hpp"
#include "pam/testfunc.hpp"

namespace pam {

// Snapshot of one chaos order at a fixed time: the field
// y -> int I^(n)_t(y,z) mu(dz). Order 0 is the deterministic heat flow.
struct ChaosTerm {
  int order = 0;
  double t = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t run_index = 0;
  LatticeSpec lattice;
  Field field;
};

struct ChaosRunConfig {
  int max_order = 4;             // N <= 6
  bool paired_spde = true;       // drive an SPDE run off the same noise
  std::vector<double> times;     // output grid
  std::vector<TestFunction> test_functions;
};

struct ChaosRunResult {
  std::vector<double> times;
  // per order 0..N: times x functions matrix of I^(n)_t(f)
  std::vector<Eigen::MatrixXd> order_integrals;
  // paired SPDE run evaluated on the same grid (empty if not paired)
  Eigen::MatrixXd spde_integrals;
  std::vector<ChaosTerm> final_terms;  // fields at t_end
};

// Advances all orders against one noise realization:
//   I^0 by heat flow, I^n by heat flow plus the Ito source
//   kappa I^{n-1} dF per step (no exponential correction: the recursion is
//   a plain iterated Ito integral). The paired SPDE run consumes the
//   identical increments.
ChaosRunResult chaos_terms(const ModelParams& params, const MeasureSpec& mu,
                           const LatticeKernels& kernels, double t_end,
                           double dt, const ChaosRunConfig& cfg,
                           SeedStream seed, std::uint64_t run_index,
                           Spectral* ws = nullptr);

// Deterministic E[(I^n_t(f, mu))^2] for n in {0,1,2} by nested quadrature
// of the iterated-integral variance formula with the (periodized, shell
// averaged) kernel h^eps in place of |y-z|^{-2}. mu must be an atom cloud
// or Lebesgue (closed-form heat flow).
double chaos_l2_norm_quadrature(const ModelParams& params,
                                const MeasureSpec& mu, const TestFunction& f,
                                double t, int order,
                                const RadialKernel& h_radial,
                                int time_nodes = 48, int radial_nodes = 96);

// Pointwise sum of the orders 0..N of one run; all terms must come from the
// same noise realization.
Field partial_sum_solution(const std::vector<ChaosTerm>& terms, int N);

}  // namespace pam
