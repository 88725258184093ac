#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/params.hpp"
#include "pam/rng.hpp"
#include "pam/testfunc.hpp"

namespace pam {

// Initial measure: Lebesgue intensity, a uniform ball, or an atom cloud,
// mollified by heat flow over time `delta` on the lattice.
struct MeasureSpec {
  enum class Kind { kLebesgue, kUniformBall, kAtomCloud, kSmoothDensity };
  Kind kind = Kind::kLebesgue;
  double delta = 0.0;  // mollification time; atoms require sqrt(delta) >= 2 cells

  double intensity = 1.0;  // lebesgue

  Eigen::VectorXd center;  // uniform ball
  double radius = 1.0;
  double total_mass = 1.0;

  std::vector<std::pair<Eigen::VectorXd, double>> atoms;  // (point, weight>0)

  TestFunction density;  // smooth density f(x) dx (duality-style data)

  static MeasureSpec lebesgue(double c) {
    MeasureSpec m;
    m.kind = Kind::kLebesgue;
    m.intensity = c;
    return m;
  }
  static MeasureSpec uniform_ball(Eigen::VectorXd c, double r, double mass,
                                  double delta = 0.0) {
    MeasureSpec m;
    m.kind = Kind::kUniformBall;
    m.center = std::move(c);
    m.radius = r;
    m.total_mass = mass;
    m.delta = delta;
    return m;
  }
  static MeasureSpec atom_cloud(
      std::vector<std::pair<Eigen::VectorXd, double>> atoms, double delta) {
    MeasureSpec m;
    m.kind = Kind::kAtomCloud;
    m.atoms = std::move(atoms);
    m.delta = delta;
    return m;
  }
  static MeasureSpec smooth_density(TestFunction f) {
    MeasureSpec m;
    m.kind = Kind::kSmoothDensity;
    m.density = std::move(f);
    return m;
  }
};

// Density of G_delta mu on the lattice. Atoms are placed by spectral phase
// shift (exact sub-cell positioning); lattice total mass is exact.
Field init_condition(const MeasureSpec& mu, const LatticeSpec& lattice);

// One Lie-Trotter step: exact spectral heat half-step, pointwise
// multiplication by exp(kappa dF - kappa^2 h^eps(0) dt / 2), second heat
// half-step. The Ito-corrected geometric factor has unit conditional mean,
// so E[step] is exactly the heat semigroup.
Field step(const Field& u, const NoiseIncrement& dF, double kappa,
           const LatticeKernels& kernels);

struct ObservablesConfig {
  std::vector<double> times;  // output grid; snapped to whole steps
  std::vector<std::pair<Eigen::VectorXd, double>> balls;  // (center, radius)
  std::vector<TestFunction> test_functions;
  bool track_quadratic_variation = false;
  // pair-interaction functionals S^(rho) = sum (r_min^2+|x-y|^2)^{-rho/2}
  // e^{-a|x|-a|y|} u(x) u(y) cell^{2d}, truncated at r_min = 2 cells
  std::vector<double> pair_rhos;
  double pair_tilt_a = 1.0;
};

struct Observables {
  std::vector<double> times;
  std::vector<double> total_mass;
  Eigen::MatrixXd ball_masses;      // times x balls
  Eigen::MatrixXd test_integrals;   // times x functions
  Eigen::MatrixXd pair_functionals; // times x rhos
  // cumulative realized QV of the total mass and the mollified bracket
  // kappa^2 int sum h(x-y) u u, both sampled on the output grid
  std::vector<double> realized_qv;
  std::vector<double> bracket;
  double floored_mass = 0.0;  // roundoff negatives clamped during the run
  std::optional<Field> final_field;
};

// Single trajectory of (3.6)-type dynamics; deterministic given
// (seed, run_index). `ws` may be shared across calls on the same lattice.
Observables simulate(const ModelParams& params, const MeasureSpec& mu,
                     const LatticeKernels& kernels, double t_end, double dt,
                     const ObservablesConfig& obs, SeedStream seed,
                     std::uint64_t run_index, Spectral* ws = nullptr,
                     bool keep_final_field = false);

// Convenience overload matching the coarse-grained signature: builds the
// kernels, then runs.
Observables simulate(const ModelParams& params, const MeasureSpec& mu,
                     double epsilon, const LatticeSpec& lattice, double t_end,
                     double dt, const ObservablesConfig& obs, SeedStream seed,
                     std::uint64_t run_index = 0);

// lattice integrals
double field_total_mass(const LatticeSpec& spec, const Field& u);
double field_ball_mass(const LatticeSpec& spec, const Field& u,
                       const Eigen::VectorXd& center, double radius);
double field_test_integral(const LatticeSpec& spec, const Field& u,
                           const TestFunction& f);

}  // namespace pam
