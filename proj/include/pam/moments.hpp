#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "pam/bridge.hpp"
#include "pam/lattice.hpp"
#include "pam/params.hpp"
#include "pam/special.hpp"
#include "pam/testfunc.hpp"

namespace pam {

// Radon measure with finitely many atoms plus an optional Lebesgue part on
// a box (empty box = whole space, first moments only).
struct DiscreteMeasure {
  std::vector<std::pair<Eigen::VectorXd, double>> atoms;
  bool has_lebesgue = false;
  double intensity = 0.0;
  Eigen::VectorXd box_lo, box_hi;  // empty => whole space
  bool whole_space() const { return has_lebesgue && box_lo.size() == 0; }

  static DiscreteMeasure atom_cloud(
      std::vector<std::pair<Eigen::VectorXd, double>> atoms);
  static DiscreteMeasure lebesgue_box(double intensity, Eigen::VectorXd lo,
                                      Eigen::VectorXd hi);
  static DiscreteMeasure lebesgue_whole(double intensity);
};

// Value with an explicit infinity marker.
struct NormResult {
  bool finite = true;
  double value = 0.0;
};

// || mu(dx) e^{-a|x|} ||_alpha. Convention for atom clouds: the singular
// |x-y|^{-alpha} part runs over pairs of distinct atoms; the regular part
// over all pairs. A measure that is one pure atom, or has coincident atoms,
// reports the infinity marker (point masses are not in H_alpha).
NormResult h_alpha_norm(const DiscreteMeasure& mu, double alpha, double a);

// int int G_t(x-x') f(x') mu(dx) dx' by quadrature (atoms reduce to radial
// integrals, box parts to separable Gaussian factors).
double first_moment_exact(const DiscreteMeasure& mu, const TestFunction& f,
                          double t);

// Monte Carlo estimate of the bridge representation of E[(u_t(f))^2]:
// (x,y) ~ mu x mu, (x',y') from the heat factors, difference bridge from
// (x-y)/sqrt(2) to (x'-y')/sqrt(2), exponential pair functional with
// eta = kappa^2/2. With `mollified_h` the singular kernel is replaced by
// h^eps (evaluated at the full difference sqrt(2)|B_s|), matching the noise
// actually simulated on the lattice.
MCEstimate second_moment_bridge_rhs(const ModelParams& params,
                                    const DiscreteMeasure& mu,
                                    const TestFunction& f, double t,
                                    std::size_t n_paths, int m, double clip,
                                    SeedStream seed, int workers = 1,
                                    const RadialKernel* mollified_h = nullptr);

// Envelope quadrature C int G G f f (1 + t^alpha/(|x-y|^a |x'-y'|^a));
// atoms-with-Gaussian-f path is exact, coincident atoms report infinity.
NormResult second_moment_bound_rhs(const ModelParams& params,
                                   const DiscreteMeasure& mu,
                                   const TestFunction& f, double t, double C);

}  // namespace pam
