#include "pam/moments.hpp"

#include <cmath>
#include <stdexcept>

#include "pam/parallel.hpp"
#include "pam/quadrature.hpp"
#include "pam/stats.hpp"

namespace pam {

namespace {

constexpr double kCoincidentTol = 1e-12;

double box_volume(const DiscreteMeasure& mu) {
  double v = 1.0;
  for (Eigen::Index i = 0; i < mu.box_lo.size(); ++i) {
    if (!(mu.box_hi[i] > mu.box_lo[i]))
      throw std::invalid_argument("DiscreteMeasure: degenerate box");
    v *= mu.box_hi[i] - mu.box_lo[i];
  }
  return v;
}

int measure_dim(const DiscreteMeasure& mu) {
  if (!mu.atoms.empty()) return static_cast<int>(mu.atoms[0].first.size());
  if (mu.has_lebesgue && mu.box_lo.size() > 0)
    return static_cast<int>(mu.box_lo.size());
  throw std::invalid_argument("DiscreteMeasure: dimension undetermined");
}

// tensor Gauss-Legendre over the box
template <typename F>
double box_integral(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                    int nodes, F&& f) {
  const int d = static_cast<int>(lo.size());
  const GaussLegendre gl(nodes);
  std::vector<int> digit(d, 0);
  Eigen::VectorXd x(d);
  double sum = 0.0;
  const std::size_t total = static_cast<std::size_t>(std::pow(nodes, d));
  for (std::size_t c = 0; c < total; ++c) {
    double w = 1.0;
    for (int ax = 0; ax < d; ++ax) {
      const double mid = 0.5 * (lo[ax] + hi[ax]);
      const double half = 0.5 * (hi[ax] - lo[ax]);
      x[ax] = mid + half * gl.x[digit[ax]];
      w *= half * gl.w[digit[ax]];
    }
    sum += w * f(x);
    for (int ax = d - 1; ax >= 0; --ax) {
      if (++digit[ax] < nodes) break;
      digit[ax] = 0;
    }
  }
  return sum;
}

}  // namespace

DiscreteMeasure DiscreteMeasure::atom_cloud(
    std::vector<std::pair<Eigen::VectorXd, double>> atoms) {
  DiscreteMeasure m;
  m.atoms = std::move(atoms);
  for (const auto& [x, w] : m.atoms)
    if (!(w > 0.0))
      throw std::invalid_argument("DiscreteMeasure: weights must be > 0");
  return m;
}

DiscreteMeasure DiscreteMeasure::lebesgue_box(double intensity,
                                              Eigen::VectorXd lo,
                                              Eigen::VectorXd hi) {
  DiscreteMeasure m;
  m.has_lebesgue = true;
  m.intensity = intensity;
  m.box_lo = std::move(lo);
  m.box_hi = std::move(hi);
  if (!(intensity > 0.0))
    throw std::invalid_argument("DiscreteMeasure: intensity must be > 0");
  box_volume(m);
  return m;
}

DiscreteMeasure DiscreteMeasure::lebesgue_whole(double intensity) {
  DiscreteMeasure m;
  m.has_lebesgue = true;
  m.intensity = intensity;
  return m;
}

NormResult h_alpha_norm(const DiscreteMeasure& mu, double alpha, double a) {
  const int d = measure_dim(mu);
  if (!(alpha > 0.0) || alpha >= d)
    throw std::invalid_argument("h_alpha_norm: need 0 < alpha < d");
  if (a < 0.0) throw std::invalid_argument("h_alpha_norm: tilt a >= 0");
  if (mu.whole_space())
    return {false, kInfinity};  // infinite mass, norm diverges

  // point masses are not in H_alpha: a single pure atom, or coincident
  // atoms, give a diverging double integral
  if (!mu.atoms.empty()) {
    for (std::size_t j = 0; j < mu.atoms.size(); ++j)
      for (std::size_t k = j + 1; k < mu.atoms.size(); ++k)
        if ((mu.atoms[j].first - mu.atoms[k].first).norm() < kCoincidentTol)
          return {false, kInfinity};
    if (mu.atoms.size() == 1 && !mu.has_lebesgue) return {false, kInfinity};
  }

  auto tilt = [a](const Eigen::VectorXd& x) { return std::exp(-a * x.norm()); };

  double total = 0.0;

  // atom-atom: regular part over all pairs, singular part over distinct pairs
  for (std::size_t j = 0; j < mu.atoms.size(); ++j) {
    const auto& [xj, wj] = mu.atoms[j];
    total += wj * wj * tilt(xj) * tilt(xj);
    for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
      if (k == j) continue;
      const auto& [xk, wk] = mu.atoms[k];
      const double r = (xj - xk).norm();
      total += wj * wk * tilt(xj) * tilt(xk) * (1.0 + std::pow(r, -alpha));
    }
  }

  if (mu.has_lebesgue) {
    const double c = mu.intensity;
    // box-box part by plain Monte Carlo on a fixed internal substream;
    // the integrand r^{-alpha} is integrable for alpha < d
    const std::size_t n_mc = 400000;
    Philox g(0x5eedULL, stream::kMoments, 7);
    const int dim = static_cast<int>(mu.box_lo.size());
    Eigen::VectorXd x(dim), y(dim);
    KahanSum acc;
    for (std::size_t i = 0; i < n_mc; ++i) {
      for (int ax = 0; ax < dim; ++ax) {
        x[ax] = mu.box_lo[ax] +
                (mu.box_hi[ax] - mu.box_lo[ax]) * g.next_double();
        y[ax] = mu.box_lo[ax] +
                (mu.box_hi[ax] - mu.box_lo[ax]) * g.next_double();
      }
      const double r = (x - y).norm();
      acc.add((1.0 + std::pow(r, -alpha)) * tilt(x) * tilt(y));
    }
    const double V = box_volume(mu);
    total += c * c * V * V * acc.value() / static_cast<double>(n_mc);

    // atom-box cross terms by tensor quadrature
    for (const auto& [xj, wj] : mu.atoms) {
      const double cross = box_integral(
          mu.box_lo, mu.box_hi, 24, [&](const Eigen::VectorXd& y) {
            const double r = (xj - y).norm();
            return (1.0 + std::pow(r, -alpha)) * tilt(y);
          });
      total += 2.0 * wj * tilt(xj) * c * cross;
    }
  }

  return {true, std::sqrt(total)};
}

double first_moment_exact(const DiscreteMeasure& mu, const TestFunction& f,
                          double t) {
  if (t < 0.0) throw std::invalid_argument("first_moment_exact: t >= 0");
  const int d = f.center.size() > 0 ? static_cast<int>(f.center.size())
                                    : measure_dim(mu);

  double total = 0.0;

  // atoms: (G_t * f)(x_j), a radial integral about the test center
  for (const auto& [xj, wj] : mu.atoms) {
    if (t == 0.0) {
      total += wj * f(xj);
    } else {
      const double dist = (xj - f.center).norm();
      auto fr = [&](double rho) { return f.radial(rho); };
      total += wj * radial_gaussian_integral(d, t, dist, fr, 1e-11);
    }
  }

  if (mu.has_lebesgue) {
    if (mu.whole_space()) {
      // heat flow leaves Lebesgue invariant: c * int f
      const double R = f.support_radius();
      auto fr = [&](double rho) { return f.radial(rho); };
      // int f = surface_{d-1} * int_0^R f(r) r^{d-1} dr
      const double omega =
          2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
      const double radial = adaptive_simpson(
          [&](double r) { return fr(r) * std::pow(r, d - 1); }, 0.0, R, 1e-12);
      total += mu.intensity * omega * radial;
    } else {
      // int f(y) [int_box G_t(x-y) dx] dy, separable Gaussian box factor
      const double R = f.support_radius();
      Eigen::VectorXd lo = f.center.array() - R, hi = f.center.array() + R;
      auto integrand = [&](const Eigen::VectorXd& y) {
        double boxf = 1.0;
        if (t > 0.0) {
          for (int ax = 0; ax < static_cast<int>(y.size()); ++ax) {
            const double s = std::sqrt(2.0 * t);
            boxf *= 0.5 * (std::erf((mu.box_hi[ax] - y[ax]) / s) -
                           std::erf((mu.box_lo[ax] - y[ax]) / s));
          }
        } else {
          for (int ax = 0; ax < static_cast<int>(y.size()); ++ax)
            if (y[ax] < mu.box_lo[ax] || y[ax] > mu.box_hi[ax]) boxf = 0.0;
        }
        return f(y) * boxf;
      };
      total += mu.intensity * box_integral(lo, hi, 32, integrand);
    }
  }
  return total;
}

MCEstimate second_moment_bridge_rhs(const ModelParams& params,
                                    const DiscreteMeasure& mu,
                                    const TestFunction& f, double t,
                                    std::size_t n_paths, int m, double clip,
                                    SeedStream seed, int workers,
                                    const RadialKernel* mollified_h) {
  const int d = params.d;
  if (mu.whole_space())
    throw std::invalid_argument(
        "second_moment_bridge_rhs: needs finite-mass or box measure");
  if (m < 2 || !(t > 0.0))
    throw std::invalid_argument("second_moment_bridge_rhs: bad t or m");
  // eta-consistency of the difference-bridge reduction
  const double eta = params.eta();
  if (params.kappa > 0.0 &&
      std::abs(alpha_of_eta(d, eta) - params.alpha) > 1e-12)
    throw std::logic_error("second_moment_bridge_rhs: alpha mismatch");

  // total mass and atom sampling table
  double mass = 0.0;
  std::vector<double> cum;
  for (const auto& [x, w] : mu.atoms) {
    mass += w;
    cum.push_back(mass);
  }
  double box_mass = 0.0;
  if (mu.has_lebesgue) {
    box_mass = mu.intensity * box_volume(mu);
    mass += box_mass;
  }
  if (!(mass > 0.0))
    throw std::invalid_argument("second_moment_bridge_rhs: zero mass");

  const double dt_step = t / m;
  const double sq2 = std::sqrt(2.0);
  std::vector<double> values(n_paths);
  std::vector<std::uint8_t> clipped(n_paths, 0);

  parallel_for_indexed(n_paths, workers, [&](std::size_t i) {
    Philox g(seed.master, seed.stream, i);
    auto draw_mu = [&]() {
      const double uu = g.next_double() * mass;
      for (std::size_t j = 0; j < cum.size(); ++j)
        if (uu <= cum[j]) return Eigen::VectorXd(mu.atoms[j].first);
      if (mu.has_lebesgue) {
        Eigen::VectorXd x(d);
        for (int ax = 0; ax < d; ++ax)
          x[ax] = mu.box_lo[ax] +
                  (mu.box_hi[ax] - mu.box_lo[ax]) * g.next_double();
        return x;
      }
      return Eigen::VectorXd(mu.atoms.back().first);
    };
    const Eigen::VectorXd x = draw_mu();
    const Eigen::VectorXd y = draw_mu();
    Eigen::VectorXd xp(d), yp(d);
    const double sdt = std::sqrt(t);
    for (int ax = 0; ax < d; ++ax) {
      xp[ax] = x[ax] + sdt * g.next_normal();
      yp[ax] = y[ax] + sdt * g.next_normal();
    }
    const double weight = f(xp) * f(yp);
    if (weight == 0.0) {
      values[i] = 0.0;
      return;
    }

    // difference bridge from (x-y)/sqrt(2) to (x'-y')/sqrt(2)
    Eigen::VectorXd b = (x - y) / sq2;
    const Eigen::VectorXd be = (xp - yp) / sq2;
    bool hit = false;
    auto integrand = [&](const Eigen::VectorXd& p) {
      if (mollified_h) {
        return (*mollified_h)(sq2 * p.norm());
      }
      const double inv = 0.5 / p.squaredNorm();  // 1/|X1-X2|^2 = 1/(2|B|^2)
      if (inv >= clip) {
        hit = true;
        return clip;
      }
      return inv;
    };
    double acc = 0.5 * integrand(b);
    for (int k = 0; k < m - 1; ++k) {
      const double remaining = t - dt_step * k;
      const double wgt = dt_step / remaining;
      const double sd = std::sqrt(dt_step * (remaining - dt_step) / remaining);
      for (int ax = 0; ax < d; ++ax)
        b[ax] += (be[ax] - b[ax]) * wgt + sd * g.next_normal();
      acc += integrand(b);
    }
    acc += 0.5 * integrand(be);
    const double kap2 = params.kappa * params.kappa;
    values[i] = weight * std::exp(kap2 * acc * dt_step);
    clipped[i] = hit ? 1 : 0;
  });

  std::size_t nclip = 0;
  for (auto c : clipped) nclip += c;
  MCEstimate est =
      reduce_samples(values, static_cast<double>(nclip) / n_paths);
  est.mean *= mass * mass;
  est.std_error *= mass * mass;
  return est;
}

NormResult second_moment_bound_rhs(const ModelParams& params,
                                   const DiscreteMeasure& mu,
                                   const TestFunction& f, double t,
                                   double C) {
  if (!(C > 0.0))
    throw std::invalid_argument("second_moment_bound_rhs: C > 0");
  if (f.kind != TestFunction::Kind::kGaussianBump)
    throw std::invalid_argument(
        "second_moment_bound_rhs: Gaussian test function required");
  if (mu.has_lebesgue)
    throw std::invalid_argument(
        "second_moment_bound_rhs: atom clouds only (box parts via the MC "
        "estimator)");
  const int d = params.d;
  const double alpha = params.alpha;

  for (std::size_t j = 0; j < mu.atoms.size(); ++j)
    for (std::size_t k = j + 1; k < mu.atoms.size(); ++k)
      if ((mu.atoms[j].first - mu.atoms[k].first).norm() < kCoincidentTol)
        return {false, kInfinity};

  const double fm = first_moment_exact(mu, f, t);
  if (t == 0.0) return {true, C * fm * fm};
  double singular = 0.0;
  const double w2 = f.width * f.width;
  // G_t(x_j - x') f(x') = c_j N(x'; m_j, v) with
  //   c_j = A (2 pi w^2)^{d/2} G_{t+w^2}(x_j - c),  v = t w^2/(t + w^2)
  const double v = t * w2 / (t + w2);
  auto coef = [&](const Eigen::VectorXd& xj) {
    const double dist2 = (xj - f.center).squaredNorm();
    return f.amplitude * std::pow(2.0 * M_PI * w2, 0.5 * d) *
           std::exp(-0.5 * d * std::log(2.0 * M_PI * (t + w2)) -
                    0.5 * dist2 / (t + w2));
  };
  auto mean_of = [&](const Eigen::VectorXd& xj) {
    return Eigen::VectorXd((w2 * xj + t * f.center) / (t + w2));
  };
  for (std::size_t j = 0; j < mu.atoms.size(); ++j)
    for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
      if (j == k) continue;  // distinct pairs carry the singular factor
      const auto& [xj, wj] = mu.atoms[j];
      const auto& [xk, wk] = mu.atoms[k];
      const double r_atoms = (xj - xk).norm();
      const double mdist = (mean_of(xj) - mean_of(xk)).norm();
      auto fr = [&](double rho) { return std::pow(rho, -alpha); };
      const double kern =
          radial_gaussian_integral(d, 2.0 * v, mdist, fr, 1e-10);
      singular += wj * wk * std::pow(r_atoms, -alpha) * coef(xj) * coef(xk) *
                  kern;
    }
  return {true, C * (fm * fm + std::pow(t, alpha) * singular)};
}

}  // namespace pam
