#include "pam/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pam/quadrature.hpp"

namespace pam {

double heat_kernel(int d, double t, double r_squared) {
  if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be > 0");
  if (r_squared < 0.0) throw std::domain_error("heat_kernel: |x|^2 < 0");
  return std::exp(-0.5 * d * std::log(2.0 * M_PI * t) -
                  0.5 * r_squared / t);
}

double log_bessel_i(double nu, double z) {
  if (nu < 0.0 || z < 0.0)
    throw std::domain_error("log_bessel_i: need nu >= 0 and z >= 0");
  if (z == 0.0) return nu == 0.0 ? 0.0 : -kInfinity;

  if (z < nu + 20.0) {
    // ascending series, all terms positive
    const double q = 0.25 * z * z;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 600; ++k) {
      term *= q / (k * (nu + k));
      sum += term;
      if (term < sum * 1e-18) break;
    }
    return nu * std::log(0.5 * z) - std::lgamma(nu + 1.0) + std::log(sum);
  }

  // Hankel expansion: I_nu(z) ~ e^z / sqrt(2 pi z) * sum_k (-1)^k a_k / z^k
  // with a_k = prod_j (4 nu^2 - (2j-1)^2) / (k! 8^k). Truncated at the
  // smallest term; at z >= nu + 20 and the orders used here the remainder
  // is far below 1e-12.
  const double mu4 = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0, prev = 1.0;
  for (int k = 1; k <= 20; ++k) {
    const double f = (mu4 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
    term *= -f;
    if (std::abs(term) > std::abs(prev)) break;  // asymptotic tail turned
    sum += term;
    prev = term;
    if (std::abs(term) < 1e-18) break;
  }
  return z - 0.5 * std::log(2.0 * M_PI * z) + std::log(sum);
}

double bessel_i(double nu, double z) { return std::exp(log_bessel_i(nu, z)); }

double log_bessel_transition_density(double dim, double t, double a,
                                     double b) {
  if (!(t > 0.0) || !(b > 0.0) || a < 0.0 || dim < 2.0)
    throw std::domain_error(
        "bessel_transition_density: need t,b > 0, a >= 0, dim >= 2");
  const double nu = 0.5 * dim - 1.0;
  if (a == 0.0 || a * b / t < 1e-290) {
    // leading Bessel term; the a powers cancel and the chi-type density
    // 2^{1-d/2}/Gamma(d/2) t^{-d/2} b^{d-1} e^{-(a^2+b^2)/2t} remains
    return (1.0 - 0.5 * dim) * std::log(2.0) - std::lgamma(0.5 * dim) -
           0.5 * dim * std::log(t) + (dim - 1.0) * std::log(b) -
           0.5 * (a * a + b * b) / t;
  }
  return -std::log(t) - (0.5 * dim - 1.0) * std::log(a) +
         0.5 * dim * std::log(b) - 0.5 * (a * a + b * b) / t +
         log_bessel_i(nu, a * b / t);
}

double bessel_transition_density(double dim, double t, double a, double b) {
  if (!(a > 0.0))
    throw std::domain_error("bessel_transition_density: need a > 0");
  return std::exp(log_bessel_transition_density(dim, t, a, b));
}

double bridge_exp_moment_exact(int d, double eta, double a, double b,
                               double t) {
  if (!(a > 0.0) || !(b > 0.0) || !(t > 0.0))
    throw std::domain_error("bridge_exp_moment_exact: need a,b,t > 0");
  const double lambda = 0.5 * (d - 2);
  alpha_of_eta(d, eta);  // validate eta window
  if (eta == 0.0) return 1.0;
  const double mu = std::sqrt(lambda * lambda - 2.0 * eta);
  const double z = a * b / t;
  if (z == 0.0) return kInfinity;
  return std::exp(log_bessel_i(mu, z) - log_bessel_i(lambda, z));
}

double bridge_exp_moment_bound(int d, double eta, double x_norm, double y_norm,
                               double t, double c_eta) {
  if (!(c_eta > 0.0))
    throw std::invalid_argument("bridge_exp_moment_bound: C(eta) must be > 0");
  const double a = alpha_of_eta(d, eta);
  if (x_norm <= 0.0 || y_norm <= 0.0) return kInfinity;
  return c_eta * std::pow(1.0 + t / (x_norm * y_norm), a);
}

double calibrate_envelope_constant(int d, double eta) {
  const double a_eta = alpha_of_eta(d, eta);
  double c = 1.0;
  // log grid over ab/t through both asymptotic regimes of the Bessel ratio
  for (int i = -60; i <= 60; ++i) {
    const double z = std::pow(10.0, i / 10.0);
    const double exact = bridge_exp_moment_exact(d, eta, 1.0, z, 1.0);
    const double shape = std::pow(1.0 + 1.0 / z, a_eta);
    c = std::max(c, exact / shape);
  }
  return c;
}

double riesz_constant(int d) {
  if (d < 3) throw std::domain_error("riesz_constant: d must be >= 3");
  const double dd = d;
  return std::exp(-0.25 * dd * std::log(M_PI) +
                  0.5 * std::lgamma(0.5 * (dd - 2.0)) +
                  std::lgamma(0.25 * (dd + 2.0)) -
                  std::lgamma(0.25 * (dd - 2.0)));
}

// (g*g)(r) for radial g in R^d:
//   omega_{d-2} int_0^inf g(s) s^{d-1} (2rs)^{-(d-3)} (rs)^{-1}
//     int_{|r-s|}^{r+s} g(w) w [(w^2-(r-s)^2)((r+s)^2-w^2)]^{(d-3)/2} dw ds
// (law of cosines substitution w^2 = r^2 + s^2 - 2 r s cos theta).
double radial_self_convolution(int d, double r,
                               const std::function<double(double)>& g,
                               double tail_radius, double tol) {
  if (d < 3) throw std::domain_error("radial_self_convolution: d >= 3");
  if (!(r > 0.0)) throw std::domain_error("radial_self_convolution: r > 0");
  const double p = 0.5 * (d - 3);
  const double omega =
      2.0 * std::pow(M_PI, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1));

  auto outer = [&](double s) -> double {
    const double lo = std::abs(r - s), hi = r + s;
    auto inner = [&](double w) -> double {
      const double A = (w * w - lo * lo) * (hi * hi - w * w);
      if (A <= 0.0) return 0.0;
      return g(w) * w * std::pow(A, p);
    };
    const double iv = adaptive_simpson(inner, lo, hi, tol * 1e-2);
    return g(s) * std::pow(s, d - 1) * iv /
           (std::pow(2.0 * r * s, d - 3) * (r * s));
  };

  // the outer integrand has an integrable |r-s|^{-1/2}-type cusp at s = r
  // (plus kernel kinks at tiny scales when g is sharply capped); a geometric
  // ladder of knots around s = r lets the adaptive rule resolve it cheaply
  std::vector<double> knots = {1e-12, 0.5 * r, r, 2.0 * r, 8.0 * r,
                               std::max(tail_radius, 16.0 * r)};
  for (double frac : {1e-8, 1e-6, 1e-4, 1e-2}) {
    knots.push_back(r * (1.0 - frac));
    knots.push_back(r * (1.0 + frac));
  }
  std::sort(knots.begin(), knots.end());
  const double core = integrate_piecewise(outer, knots, tol);

  // algebraic tail: for s >> r both factors sit near g(s), the inner
  // integral concentrates and (g*g) tail ~ int_{S}^inf g(s)^2 ... ; we
  // integrate numerically on a stretched grid instead of truncating hard
  double tail = 0.0;
  double s0 = knots.back();
  for (int k = 0; k < 24; ++k) {
    const double s1 = s0 * 2.0;
    const double piece = adaptive_simpson(outer, s0, s1, tol);
    tail += piece;
    if (std::abs(piece) < tol * std::abs(core + tail)) break;
    s0 = s1;
  }
  return omega * (core + tail);
}

double g_eps(int d, double eps, double r) {
  if (!(eps >= 0.0)) throw std::domain_error("g_eps: eps >= 0");
  const double c7 = riesz_constant(d);
  if (r <= 0.0) {
    if (eps == 0.0) return kInfinity;
    return 1.0 / eps;
  }
  const double v = c7 * std::pow(r, -0.5 * (d + 2));
  return eps > 0.0 ? std::min(v, 1.0 / eps) : v;
}

double h_eps_free(int d, double eps, double r, double tol) {
  if (!(eps > 0.0)) throw std::domain_error("h_eps_free: eps > 0");
  auto g = [d, eps](double w) { return g_eps(d, eps, w); };
  // the cap radius is a kink of g; make sure the quadrature sees it
  const double c7 = riesz_constant(d);
  const double r_cap = std::pow(c7 * eps, 2.0 / (d + 2));
  const double tail = std::max({64.0 * r, 64.0 * r_cap, 8.0});
  return radial_self_convolution(d, r, g, tail, tol);
}

double radial_gaussian_integral(int d, double t, double a,
                                const std::function<double(double)>& f,
                                double tol) {
  if (!(t > 0.0)) throw std::domain_error("radial_gaussian_integral: t > 0");
  const double sd = std::sqrt(t);
  auto integrand = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    return std::exp(log_bessel_transition_density(d, t, a, rho)) * f(rho);
  };
  std::vector<double> knots;
  knots.push_back(1e-14);
  for (double k : {a - 8.0 * sd, a - 2.0 * sd, a, a + 2.0 * sd, a + 8.0 * sd,
                   a + 14.0 * sd})
    if (k > 1e-14) knots.push_back(k);
  std::sort(knots.begin(), knots.end());
  return integrate_piecewise(integrand, knots, tol);
}

GaussianBoundCheck gaussian_convolution_bound_check(int d, double r, double t,
                                                    double dist) {
  if (r < 0.0 || r >= d)
    throw std::domain_error(
        "gaussian_convolution_bound_check: need 0 <= r < d (divergent "
        "otherwise)");
  if (!(t > 0.0) || !(dist >= 0.0))
    throw std::domain_error("gaussian_convolution_bound_check: t > 0");
  GaussianBoundCheck out;
  if (r == 0.0) {
    out.lhs = 1.0;
  } else {
    auto f = [r](double rho) { return std::pow(rho, -r); };
    out.lhs = radial_gaussian_integral(d, 2.0 * t, dist, f, 1e-11);
  }
  const double spatial = dist > 0.0 ? std::pow(dist, -r) : kInfinity;
  out.rhs_envelope = std::min(spatial, std::pow(t, -0.5 * r));
  return out;
}

}  // namespace pam
