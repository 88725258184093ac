#include "pam/chaos.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "pam/quadrature.hpp"
#include "pam/special.hpp"
#include "pam/stats.hpp"

namespace pam {

namespace {

double gaussian_nd(int d, double var, double dist2) {
  return std::exp(-0.5 * d * std::log(2.0 * M_PI * var) - 0.5 * dist2 / var);
}

}  // namespace

ChaosRunResult chaos_terms(const ModelParams& params, const MeasureSpec& mu,
                           const LatticeKernels& kernels, double t_end,
                           double dt, const ChaosRunConfig& cfg,
                           SeedStream seed, std::uint64_t run_index,
                           Spectral* ws_in) {
  if (cfg.max_order < 0)
    throw std::invalid_argument("chaos_terms: order must be >= 0");
  if (cfg.max_order > 6)
    throw std::invalid_argument(
        "chaos_terms: orders beyond 6 are not supported (variance grows "
        "faster than the cost is worth)");
  const LatticeSpec& lattice = kernels.lattice;
  if (!(dt > 0.0) || dt > 0.5 * lattice.cell() * lattice.cell() * (1.0 + 1e-12))
    throw std::invalid_argument("chaos_terms: need 0 < dt <= cell^2/2");
  const long long steps = std::llround(t_end / dt);
  if (steps < 1 || std::abs(steps * dt - t_end) > 1e-9 * t_end)
    throw std::invalid_argument("chaos_terms: t_end must be whole steps");

  std::unique_ptr<Spectral> ws_own;
  if (!ws_in) {
    ws_own = std::make_unique<Spectral>(lattice);
    ws_in = ws_own.get();
  }
  Spectral& ws = *ws_in;
  const std::size_t N = lattice.size();
  const double vol = lattice.cell_volume();
  const int NN = cfg.max_order;

  std::vector<long long> out_steps;
  for (double t : cfg.times) {
    long long k = std::llround(t / dt);
    if (k < 0 || k > steps)
      throw std::invalid_argument("chaos_terms: output time out of range");
    if (!out_steps.empty() && k < out_steps.back())
      throw std::invalid_argument("chaos_terms: output times must be sorted");
    out_steps.push_back(k);
  }

  std::vector<Field> fn_values;
  for (const auto& f : cfg.test_functions) {
    const Field d2 = distance_squared_map(lattice, f.center);
    Field m(N);
    for (std::size_t i = 0; i < N; ++i) m[i] = f.radial(std::sqrt(d2[i]));
    fn_values.push_back(std::move(m));
  }

  const Eigen::ArrayXd& k2 = ws.k_squared();
  Eigen::ArrayXd heat_half(ws.spec_size()), heat_full(ws.spec_size());
  for (std::size_t s = 0; s < ws.spec_size(); ++s) {
    heat_half[s] = std::exp(-0.25 * k2[s] * dt);
    heat_full[s] = heat_half[s] * heat_half[s];
  }

  // chaos orders are signed fields: no positivity clamp on them
  auto heat_apply = [&](const Field& src, Field& dst,
                        const Eigen::ArrayXd& mult) {
    for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = src[i];
    ws.forward();
    for (std::size_t s = 0; s < ws.spec_size(); ++s) ws.spec_buf()[s] *= mult[s];
    ws.inverse();
    for (std::size_t i = 0; i < N; ++i) dst[i] = ws.real_buf()[i];
  };

  ChaosRunResult result;
  result.order_integrals.assign(
      NN + 1, Eigen::MatrixXd::Zero(out_steps.size(), fn_values.size()));
  if (cfg.paired_spde)
    result.spde_integrals.resize(out_steps.size(), fn_values.size());

  // mid-chain states (after the leading half-step)
  std::vector<Field> w(NN + 1, Field::Zero(N));
  const Field u0 = init_condition(mu, lattice);
  heat_apply(u0, w[0], heat_half);
  Field u_spde;
  if (cfg.paired_spde) u_spde = w[0];

  Philox rng(seed.master, seed.stream, run_index);
  const double noise_sd = std::sqrt(dt / vol);
  const double ito = 0.5 * params.kappa * params.kappa * kernels.h0 * dt;

  Field dF(N), tmp(N);
  std::size_t out_pos = 0;

  auto integrate_fn = [&](const Field& state, std::size_t f) {
    KahanSum s;
    for (std::size_t i = 0; i < N; ++i) s.add(state[i] * fn_values[f][i]);
    return s.value() * vol;
  };

  auto record = [&](long long step_idx) {
    while (out_pos < out_steps.size() && out_steps[out_pos] == step_idx) {
      result.times.push_back(step_idx * dt);
      for (int n = 0; n <= NN; ++n) {
        if (step_idx == 0) {
          for (std::size_t f = 0; f < fn_values.size(); ++f)
            result.order_integrals[n](out_pos, f) =
                n == 0 ? integrate_fn(u0, f) : 0.0;
          continue;
        }
        heat_apply(w[n], tmp, heat_half);
        for (std::size_t f = 0; f < fn_values.size(); ++f)
          result.order_integrals[n](out_pos, f) = integrate_fn(tmp, f);
      }
      if (cfg.paired_spde) {
        if (step_idx == 0) {
          for (std::size_t f = 0; f < fn_values.size(); ++f)
            result.spde_integrals(out_pos, f) = integrate_fn(u0, f);
        } else {
          heat_apply(u_spde, tmp, heat_half);
          for (std::size_t f = 0; f < fn_values.size(); ++f)
            result.spde_integrals(out_pos, f) = integrate_fn(tmp, f);
        }
      }
      ++out_pos;
    }
  };

  record(0);

  for (long long k = 0; k < steps; ++k) {
    // shared noise increment
    {
      double* re = ws.real_buf();
      for (std::size_t i = 0; i < N; ++i) re[i] = noise_sd * rng.next_normal();
      ws.forward();
      for (std::size_t s = 0; s < ws.spec_size(); ++s)
        ws.spec_buf()[s] *= kernels.g_hat[s] * vol;
      ws.inverse();
      for (std::size_t i = 0; i < N; ++i) dF[i] = ws.real_buf()[i];
    }

    // descending order so each source reads the pre-step lower order
    for (int n = NN; n >= 1; --n) {
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = w[n][i] + params.kappa * w[n - 1][i] * dF[i];
      heat_apply(tmp, w[n], heat_full);
    }
    heat_apply(w[0], w[0], heat_full);

    if (cfg.paired_spde) {
      for (std::size_t i = 0; i < N; ++i)
        u_spde[i] *= std::exp(params.kappa * dF[i] - ito);
      heat_apply(u_spde, u_spde, heat_full);
    }

    record(k + 1);
  }

  // final-time snapshots of every order (synchronized states)
  for (int n = 0; n <= NN; ++n) {
    ChaosTerm term;
    term.order = n;
    term.t = steps * dt;
    term.master_seed = seed.master;
    term.run_index = run_index;
    term.lattice = lattice;
    heat_apply(w[n], tmp, heat_half);
    term.field = tmp;
    result.final_terms.push_back(std::move(term));
  }
  return result;
}

namespace {

struct SecondMomentGeometry {
  // per-coordinate covariance blocks of the pair differences r_i = y_i - z_i
  double a = 0.0;  // Var(r_1)
  double b = 0.0;  // Var(r_2)
  double c = 0.0;  // Cov(r_1, r_2)
  double weight = 1.0;
};

// E[h(|r|)] for r ~ N(mean_len * e1, var * I_d), by the radial density
double expected_h(int d, double var, double mean_len, const RadialKernel& h,
                  const GaussLegendre& gl) {
  const double sd = std::sqrt(var);
  const double lo = std::max(0.0, mean_len - 9.0 * sd);
  const double hi = mean_len + 9.0 * sd + 1e-12;
  auto f = [&](double r) {
    if (r <= 0.0) return 0.0;
    return std::exp(log_bessel_transition_density(d, var, mean_len, r)) * h(r);
  };
  // split at the mean to capture the peak
  double s = 0.0;
  if (mean_len > lo) {
    s += gl.integrate(f, lo, mean_len);
    s += gl.integrate(f, mean_len, hi);
  } else {
    s += gl.integrate(f, lo, 0.5 * (lo + hi));
    s += gl.integrate(f, 0.5 * (lo + hi), hi);
  }
  return s;
}

// E[h(|r1|) h(|r2|)] for centered jointly Gaussian pair differences
double expected_hh(int d, const SecondMomentGeometry& g, const RadialKernel& h,
                   const GaussLegendre& gl) {
  const double sd1 = std::sqrt(g.a);
  const double cond_var = g.b - g.c * g.c / g.a;
  auto outer = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double p1 =
        std::exp(log_bessel_transition_density(d, g.a, 0.0, r));
    const double mean2 = g.c / g.a * r;
    return p1 * h(r) * expected_h(d, cond_var, mean2, h, gl);
  };
  return gl.integrate(outer, 1e-12, 4.5 * sd1 * std::sqrt(d)) +
         gl.integrate(outer, 4.5 * sd1 * std::sqrt(d), 9.0 * sd1 * std::sqrt(d));
}

}  // namespace

double chaos_l2_norm_quadrature(const ModelParams& params,
                                const MeasureSpec& mu, const TestFunction& f,
                                double t, int order,
                                const RadialKernel& h_radial, int time_nodes,
                                int radial_nodes) {
  if (order < 0 || order > 2)
    throw std::invalid_argument(
        "chaos_l2_norm_quadrature: only orders 0..2 are evaluated "
        "deterministically");
  if (f.kind != TestFunction::Kind::kGaussianBump)
    throw std::invalid_argument(
        "chaos_l2_norm_quadrature: needs a Gaussian test function");
  const int d = params.d;
  const double w2 = f.width * f.width;
  const double A = f.amplitude;
  const double k2cb = params.kappa * params.kappa;

  const bool is_atom = mu.kind == MeasureSpec::Kind::kAtomCloud;
  const bool is_lebesgue = mu.kind == MeasureSpec::Kind::kLebesgue;
  if (!is_atom && !is_lebesgue)
    throw std::invalid_argument(
        "chaos_l2_norm_quadrature: mu must be an atom or Lebesgue");
  if (is_atom && mu.atoms.size() != 1)
    throw std::invalid_argument(
        "chaos_l2_norm_quadrature: one atom supported");

  // closed-form n = 0 term: (int f G_t mu^delta)^2
  const double delta = is_atom ? mu.delta : 0.0;
  double c0;  // int f G_t mu^delta
  if (is_atom) {
    const auto& [x0, W] = mu.atoms.front();
    const double sigma = delta + w2 + t;
    const double dist2 = (x0 - f.center).squaredNorm();
    c0 = W * A * std::pow(2.0 * M_PI * w2, 0.5 * d) *
         gaussian_nd(d, sigma, dist2);
  } else {
    c0 = mu.intensity * A * std::pow(2.0 * M_PI * w2, 0.5 * d);
  }
  if (order == 0) return c0 * c0;

  const GaussLegendre gl_time(time_nodes);
  const GaussLegendre gl_rad(radial_nodes / 2);

  if (order == 1) {
    auto integrand = [&](double s) {
      double a;  // Var of the pair difference at time s
      if (is_atom) {
        const double T = delta + t + w2;
        const double u = s + delta;
        a = 2.0 * u * (T - u) / T;
      } else {
        a = 2.0 * (w2 + (t - s));
      }
      return expected_h(d, a, 0.0, h_radial, gl_rad);
    };
    const double time_int = gl_time.integrate(integrand, 0.0, t);
    return k2cb * c0 * c0 * time_int;
  }

  // order == 2
  auto geometry = [&](double s1, double s2) {
    SecondMomentGeometry g;
    if (is_atom) {
      const double T = delta + t + w2;
      const double u1 = s1 + delta, u2 = s2 + delta;
      g.a = 2.0 * u1 * (T - u1) / T;
      g.b = 2.0 * u2 * (T - u2) / T;
      g.c = 2.0 * u1 * (T - u2) / T;
    } else {
      g.b = 2.0 * (w2 + (t - s2));
      g.a = g.b + 2.0 * (s2 - s1);
      g.c = g.b;
    }
    return g;
  };
  auto inner = [&](double s2) {
    auto f1 = [&](double s1) {
      return expected_hh(d, geometry(s1, s2), h_radial, gl_rad);
    };
    return gl_time.integrate(f1, 0.0, s2);
  };
  const double simplex = gl_time.integrate(inner, 0.0, t);
  return k2cb * k2cb * c0 * c0 * simplex;
}

Field partial_sum_solution(const std::vector<ChaosTerm>& terms, int N) {
  if (terms.empty()) throw std::invalid_argument("partial_sum: no terms");
  const auto& first = terms.front();
  Field sum = Field::Zero(first.field.size());
  std::vector<bool> seen(N + 1, false);
  for (const auto& term : terms) {
    if (term.master_seed != first.master_seed ||
        term.run_index != first.run_index || term.t != first.t)
      throw std::invalid_argument(
          "partial_sum: terms come from mismatched runs/seeds");
    if (term.field.size() != sum.size())
      throw std::invalid_argument("partial_sum: lattice mismatch");
    if (term.order <= N) {
      sum += term.field;
      seen[term.order] = true;
    }
  }
  for (int n = 0; n <= N; ++n)
    if (!seen[n])
      throw std::invalid_argument("partial_sum: missing chaos order");
  return sum;
}

}  // namespace pam
