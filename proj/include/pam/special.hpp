#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>

#include "pam/params.hpp"

namespace pam {

// Heat kernel G_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / 2t).
double heat_kernel(int d, double t, double r_squared);

template <typename Derived>
double heat_kernel(int d, double t, const Eigen::MatrixBase<Derived>& x) {
  return heat_kernel(d, t, x.squaredNorm());
}

// log of the modified Bessel function of the first kind I_nu(z).
// Power series for z < nu + 20, Hankel-type large-z expansion beyond;
// everything in log space so ratios at large z stay finite.
double log_bessel_i(double nu, double z);
double bessel_i(double nu, double z);

// Radial transition density of the norm of a d-dimensional Brownian motion
// started at radius a (d may be fractional):
//   q^{(d)}_t(a,b) = t^{-1} a^{-(d-2)/2} b^{d/2} exp(-(a^2+b^2)/2t)
//                    I_{(d/2)-1}(ab/t).
// a = 0 degenerates to the chi-type density, handled explicitly.
double log_bessel_transition_density(double dim, double t, double a, double b);
double bessel_transition_density(double dim, double t, double a, double b);

// Exact exponential moment of a Bessel bridge from a to b over [0,t]:
//   E^{(d)}_{a,b,t}[ exp(eta int_0^t ds/R_s^2) ]
//     = a^{-alpha(eta)} b^{alpha(eta)} q^{(2 mu + 2)}_t(a,b) / q^{(d)}_t(a,b),
//   mu = sqrt(((d-2)/2)^2 - 2 eta).
// All prefactors cancel against the densities and the value reduces to the
// Bessel ratio I_mu(ab/t) / I_{(d-2)/2}(ab/t); evaluated that way, in
// log space, so no 0/0 can occur when both densities underflow.
double bridge_exp_moment_exact(int d, double eta, double a, double b,
                               double t);

// Envelope C(eta) (1 + t/(|x||y|))^{alpha(eta)}. The constant is not known
// in closed form and must be supplied (see calibrate_envelope_constant).
double bridge_exp_moment_bound(int d, double eta, double x_norm, double y_norm,
                               double t, double c_eta);

// Smallest C(eta) with exact <= C (1 + t/ab)^alpha over a log grid of
// (a, b, t); the functional form is the tested content, the constant is a
// calibration output.
double calibrate_envelope_constant(int d, double eta);

// Constant c7 with (c7 |.|^{-(d+2)/2}) * (c7 |.|^{-(d+2)/2}) = |.|^{-2},
// from the Riesz composition formula:
//   c7 = pi^{-d/4} sqrt(Gamma((d-2)/2)) Gamma((d+2)/4) / Gamma((d-2)/4).
double riesz_constant(int d);

// Self-convolution of a radial function in R^d evaluated at radius r, by
// nested 1-d quadrature. Independent oracle for riesz_constant and the
// route to the free-space mollified kernel h^eps.
double radial_self_convolution(int d, double r,
                               const std::function<double(double)>& g,
                               double tail_radius, double tol = 1e-9);

// Free-space mollified kernels of the noise construction:
//   g^eps(r) = min(c7 r^{-(d+2)/2}, 1/eps),  h^eps = g^eps * g^eps.
double g_eps(int d, double eps, double r);
double h_eps_free(int d, double eps, double r, double tol = 1e-8);

// int_0^inf q^{(d)}_t(a, rho) f(rho) drho -- Gaussian pair integrals reduce
// to this radial form.
double radial_gaussian_integral(int d, double t, double a,
                                const std::function<double(double)>& f,
                                double tol = 1e-10);

// Both sides of the Gaussian convolution comparison for 0 <= r < d:
//   lhs  = int int G_t(x-x') G_t(y-y') |x'-y'|^{-r} dx' dy'
//        = E |dx + sqrt(2t) Z|^{-r},   dx = x - y,
//   rhs  = min(|x-y|^{-r}, t^{-r/2}).
struct GaussianBoundCheck {
  double lhs;
  double rhs_envelope;
};
GaussianBoundCheck gaussian_convolution_bound_check(int d, double r, double t,
                                                    double dist);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace pam
