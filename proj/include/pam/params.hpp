#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pam {

// Exponent alpha(eta) = (d-2)/2 - sqrt(((d-2)/2)^2 - 2*eta).
// Finite exponential moments of exp(eta * int ds/R_s^2) require
// 0 <= eta <= (d-2)^2/8; outside that window there is no finite moment.
inline double alpha_of_eta(int d, double eta) {
  if (d < 3) throw std::domain_error("alpha_of_eta: d must be >= 3");
  const double nu = 0.5 * (d - 2);
  if (eta < 0.0 || eta > 0.5 * nu * nu)
    throw std::domain_error(
        "alpha_of_eta: eta outside [0,(d-2)^2/8], no finite exponential "
        "moment regime");
  return nu - std::sqrt(nu * nu - 2.0 * eta);
}

// Model parameters of the equation du = 1/2 Lap u dt + kappa u dF.
// The coupling must satisfy 0 < kappa < (d-2)/2 so that second moments
// exist; alpha is the derived intermittency exponent.
struct ModelParams {
  int d = 3;
  double kappa = 0.0;
  double alpha = 0.0;

  ModelParams() = default;
  // kappa = 0 is the heat-flow null case used by the degenerate checks;
  // the singular theory itself needs 0 < kappa < (d-2)/2.
  ModelParams(int d_, double kappa_) : d(d_), kappa(kappa_) {
    if (d < 3) throw std::invalid_argument("ModelParams: d must be >= 3");
    if (kappa < 0.0 || !(kappa < 0.5 * (d - 2)))
      throw std::invalid_argument(
          "ModelParams: kappa must lie in [0,(d-2)/2); got kappa=" +
          std::to_string(kappa) + ", d=" + std::to_string(d));
    alpha = alpha_of_eta(d, 0.5 * kappa * kappa);
  }

  // eta of the pair-difference bridge reduction.
  double eta() const { return 0.5 * kappa * kappa; }
};

struct EtaParam {
  int d = 3;
  double eta = 0.0;
  double alpha_eta = 0.0;

  EtaParam(int d_, double eta_) : d(d_), eta(eta_) {
    alpha_eta = alpha_of_eta(d, eta);  // validates the window
  }
};

}  // namespace pam
