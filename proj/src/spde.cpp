#include "pam/spde.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>

#include "pam/stats.hpp"

namespace pam {

namespace {

double clamp_negatives(Field& u, double vol) {
  double removed = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] < 0.0) {
      removed -= u[i];
      u[i] = 0.0;
    }
  return removed * vol;
}

}  // namespace

double field_total_mass(const LatticeSpec& spec, const Field& u) {
  KahanSum s;
  for (Eigen::Index i = 0; i < u.size(); ++i) s.add(u[i]);
  return s.value() * spec.cell_volume();
}

double field_ball_mass(const LatticeSpec& spec, const Field& u,
                       const Eigen::VectorXd& center, double radius) {
  if (radius < 2.0 * spec.cell())
    throw std::invalid_argument(
        "ball mass: radius below 2 cells is unresolved");
  const Field d2 = distance_squared_map(spec, center);
  KahanSum s;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (d2[i] <= radius * radius) s.add(u[i]);
  return s.value() * spec.cell_volume();
}

double field_test_integral(const LatticeSpec& spec, const Field& u,
                           const TestFunction& f) {
  const Field d2 = distance_squared_map(spec, f.center);
  KahanSum s;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    s.add(u[i] * f.radial(std::sqrt(d2[i])));
  return s.value() * spec.cell_volume();
}

Field init_condition(const MeasureSpec& mu, const LatticeSpec& lattice) {
  lattice.validate();
  const std::size_t N = lattice.size();
  const double vol = lattice.cell_volume();

  switch (mu.kind) {
    case MeasureSpec::Kind::kLebesgue: {
      if (!(mu.intensity > 0.0))
        throw std::invalid_argument("init: intensity must be > 0");
      return Field::Constant(N, mu.intensity);  // heat flow fixes constants
    }

    case MeasureSpec::Kind::kUniformBall: {
      if (!(mu.total_mass > 0.0))
        throw std::invalid_argument("init: total mass must be > 0");
      if (mu.radius < 2.0 * lattice.cell())
        throw std::invalid_argument("init: ball radius unresolved (<2 cells)");
      const Field d2 = distance_squared_map(lattice, mu.center);
      Field u = Field::Zero(N);
      std::size_t inside = 0;
      for (std::size_t i = 0; i < N; ++i)
        if (d2[i] <= mu.radius * mu.radius) {
          u[i] = 1.0;
          ++inside;
        }
      if (inside == 0) throw std::invalid_argument("init: empty ball");
      u *= mu.total_mass / (static_cast<double>(inside) * vol);
      if (mu.delta > 0.0) {
        Spectral ws(lattice);
        for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = u[i];
        ws.forward();
        for (std::size_t s = 0; s < ws.spec_size(); ++s)
          ws.spec_buf()[s] *= std::exp(-0.5 * ws.k_squared()[s] * mu.delta);
        ws.inverse();
        for (std::size_t i = 0; i < N; ++i) u[i] = ws.real_buf()[i];
        clamp_negatives(u, vol);
      }
      return u;
    }

    case MeasureSpec::Kind::kSmoothDensity: {
      const Field d2 = distance_squared_map(lattice, mu.density.center);
      Field u(N);
      for (std::size_t i = 0; i < N; ++i)
        u[i] = mu.density.radial(std::sqrt(d2[i]));
      return u;
    }

    case MeasureSpec::Kind::kAtomCloud: {
      if (mu.atoms.empty()) throw std::invalid_argument("init: no atoms");
      for (const auto& [x, w] : mu.atoms) {
        if (!(w > 0.0)) throw std::invalid_argument("init: atom weight <= 0");
        if (x.size() != lattice.d)
          throw std::invalid_argument("init: atom dim mismatch");
      }
      // peak std dev sqrt(delta) must span at least 2 cells
      if (!(mu.delta > 0.0) ||
          std::sqrt(mu.delta) < 2.0 * lattice.cell())
        throw std::invalid_argument(
            "init: atom mollification unresolved, need sqrt(delta) >= 2 "
            "cells");
      Spectral ws(lattice);
      std::vector<double> k(lattice.d);
      for (std::size_t s = 0; s < ws.spec_size(); ++s) {
        ws.wavevector(s, k.data());
        std::complex<double> acc(0.0, 0.0);
        for (const auto& [x, w] : mu.atoms) {
          double phase = 0.0;
          for (int ax = 0; ax < lattice.d; ++ax) phase += k[ax] * x[ax];
          acc += w * std::exp(std::complex<double>(0.0, -phase));
        }
        ws.spec_buf()[s] =
            acc / vol * std::exp(-0.5 * ws.k_squared()[s] * mu.delta);
      }
      ws.inverse();
      Field u(N);
      for (std::size_t i = 0; i < N; ++i) u[i] = ws.real_buf()[i];
      clamp_negatives(u, vol);
      return u;
    }
  }
  throw std::logic_error("init: unknown measure kind");
}

Field step(const Field& u, const NoiseIncrement& dF, double kappa,
           const LatticeKernels& kernels) {
  const LatticeSpec& lattice = kernels.lattice;
  if (static_cast<std::size_t>(u.size()) != lattice.size() ||
      dF.field.size() != u.size())
    throw std::invalid_argument("step: lattice mismatch");
  if (dF.epsilon != kernels.epsilon)
    throw std::invalid_argument("step: noise built for a different epsilon");
  const double dt = dF.dt;
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt > 0");

  Spectral ws(lattice);
  const std::size_t N = lattice.size();
  auto half_heat = [&](Field& v) {
    for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = v[i];
    ws.forward();
    for (std::size_t s = 0; s < ws.spec_size(); ++s)
      ws.spec_buf()[s] *= std::exp(-0.25 * ws.k_squared()[s] * dt);
    ws.inverse();
    for (std::size_t i = 0; i < N; ++i) v[i] = ws.real_buf()[i];
    clamp_negatives(v, lattice.cell_volume());
  };

  Field v = u;
  half_heat(v);
  const double ito = 0.5 * kappa * kappa * kernels.h0 * dt;
  for (std::size_t i = 0; i < N; ++i)
    v[i] *= std::exp(kappa * dF.field[i] - ito);
  half_heat(v);
  return v;
}

Observables simulate(const ModelParams& params, const MeasureSpec& mu,
                     const LatticeKernels& kernels, double t_end, double dt,
                     const ObservablesConfig& obs, SeedStream seed,
                     std::uint64_t run_index, Spectral* ws_in,
                     bool keep_final_field) {
  const LatticeSpec& lattice = kernels.lattice;
  if (!(t_end > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("simulate: need t_end, dt > 0");
  const double cell = lattice.cell();
  if (dt > 0.5 * cell * cell * (1.0 + 1e-12))
    throw std::invalid_argument(
        "simulate: dt must be <= cell^2/2 to resolve the heat scale");

  const long long steps = std::llround(t_end / dt);
  if (steps < 1 || std::abs(steps * dt - t_end) > 1e-9 * t_end)
    throw std::invalid_argument(
        "simulate: t_end must be a whole number of steps");

  std::unique_ptr<Spectral> ws_own;
  if (!ws_in) {
    ws_own = std::make_unique<Spectral>(lattice);
    ws_in = ws_own.get();
  }
  Spectral& ws = *ws_in;
  const std::size_t N = lattice.size();
  const double vol = lattice.cell_volume();

  // output schedule: snap each requested time to a whole step
  std::vector<long long> out_steps;
  for (double t : obs.times) {
    long long k = std::llround(t / dt);
    if (k < 0 || k > steps)
      throw std::invalid_argument("simulate: output time outside [0, t_end]");
    if (!out_steps.empty() && k < out_steps.back())
      throw std::invalid_argument("simulate: output times must be sorted");
    out_steps.push_back(k);
  }

  // precompute observable weights
  std::vector<Field> ball_masks;
  for (const auto& [c, r] : obs.balls) {
    if (r < 2.0 * cell)
      throw std::invalid_argument("simulate: ball radius below 2 cells");
    const Field d2 = distance_squared_map(lattice, c);
    Field m(N);
    for (std::size_t i = 0; i < N; ++i) m[i] = d2[i] <= r * r ? 1.0 : 0.0;
    ball_masks.push_back(std::move(m));
  }
  std::vector<Field> fn_values;
  for (const auto& f : obs.test_functions) {
    const Field d2 = distance_squared_map(lattice, f.center);
    Field m(N);
    for (std::size_t i = 0; i < N; ++i) m[i] = f.radial(std::sqrt(d2[i]));
    fn_values.push_back(std::move(m));
  }

  // S^(rho) machinery: tilt weights and the truncated kernels' spectra
  Field tilt;
  std::vector<Eigen::ArrayXd> rho_kernel_hat;
  if (!obs.pair_rhos.empty()) {
    const Field d2o = distance_squared_map(lattice, Eigen::VectorXd::Zero(lattice.d));
    tilt.resize(N);
    for (std::size_t i = 0; i < N; ++i)
      tilt[i] = std::exp(-obs.pair_tilt_a * std::sqrt(d2o[i]));
    const double rmin2 = 4.0 * cell * cell;
    for (double rho : obs.pair_rhos) {
      if (rho >= params.d - params.alpha)
        throw std::invalid_argument(
            "simulate: rho >= d - alpha leaves the pair functional without "
            "finite expectation");
      for (std::size_t i = 0; i < N; ++i) {
        const double r = lattice.min_image_radius(i);
        ws.real_buf()[i] = std::pow(rmin2 + r * r, -0.5 * rho);
      }
      ws.forward();
      Eigen::ArrayXd hat(ws.spec_size());
      for (std::size_t s = 0; s < ws.spec_size(); ++s)
        hat[s] = ws.spec_buf()[s].real();
      rho_kernel_hat.push_back(std::move(hat));
    }
  }

  Observables result;
  result.ball_masses.resize(out_steps.size(), ball_masks.size());
  result.test_integrals.resize(out_steps.size(), fn_values.size());
  result.pair_functionals.resize(out_steps.size(), obs.pair_rhos.size());

  Field u = init_condition(mu, lattice);
  Field u_out(N);

  const Eigen::ArrayXd& k2 = ws.k_squared();
  Eigen::ArrayXd heat_half(ws.spec_size()), heat_full(ws.spec_size());
  for (std::size_t s = 0; s < ws.spec_size(); ++s) {
    heat_half[s] = std::exp(-0.25 * k2[s] * dt);
    heat_full[s] = heat_half[s] * heat_half[s];
  }

  auto heat_apply = [&](const Field& src, Field& dst,
                        const Eigen::ArrayXd& mult) {
    for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = src[i];
    ws.forward();
    for (std::size_t s = 0; s < ws.spec_size(); ++s) ws.spec_buf()[s] *= mult[s];
    ws.inverse();
    for (std::size_t i = 0; i < N; ++i) dst[i] = ws.real_buf()[i];
    result.floored_mass += clamp_negatives(dst, vol);
  };

  Philox rng(seed.master, seed.stream, run_index);
  const double ito = 0.5 * params.kappa * params.kappa * kernels.h0 * dt;
  const double noise_sd = std::sqrt(dt / vol);

  double realized_qv = 0.0, bracket = 0.0;
  std::size_t out_pos = 0;

  auto record_outputs = [&](long long step_idx, const Field& state) {
    while (out_pos < out_steps.size() && out_steps[out_pos] == step_idx) {
      result.times.push_back(step_idx * dt);
      result.total_mass.push_back(field_total_mass(lattice, state));
      for (std::size_t b = 0; b < ball_masks.size(); ++b) {
        KahanSum s;
        for (std::size_t i = 0; i < N; ++i)
          if (ball_masks[b][i] != 0.0) s.add(state[i]);
        result.ball_masses(out_pos, b) = s.value() * vol;
      }
      for (std::size_t f = 0; f < fn_values.size(); ++f) {
        KahanSum s;
        for (std::size_t i = 0; i < N; ++i) s.add(state[i] * fn_values[f][i]);
        result.test_integrals(out_pos, f) = s.value() * vol;
      }
      for (std::size_t r = 0; r < rho_kernel_hat.size(); ++r) {
        // S = <tilt u, K_rho (*) tilt u> cell^{2d} via one spectral pass
        for (std::size_t i = 0; i < N; ++i)
          ws.real_buf()[i] = state[i] * tilt[i];
        ws.forward();
        for (std::size_t s = 0; s < ws.spec_size(); ++s)
          ws.spec_buf()[s] *= rho_kernel_hat[r][s];
        ws.inverse();
        KahanSum s;
        for (std::size_t i = 0; i < N; ++i)
          s.add(state[i] * tilt[i] * ws.real_buf()[i]);
        result.pair_functionals(out_pos, r) = s.value() * vol * vol;
      }
      if (obs.track_quadratic_variation) {
        result.realized_qv.push_back(realized_qv);
        result.bracket.push_back(bracket);
      }
      ++out_pos;
    }
  };

  record_outputs(0, u);

  // Strang chain: H_{1/2} (M_k H)^{...} M_0 H_{1/2}; u holds the mid-chain
  // state, synchronized outputs apply the trailing half-step into u_out.
  Field mid(N);
  heat_apply(u, mid, heat_half);
  for (long long k = 0; k < steps; ++k) {
    if (obs.track_quadratic_variation) {
      // bracket increment kappa^2 dt sum h(x-y) v(x) v(y) cell^{2d},
      // evaluated at the state the multiplicative kick actually sees
      for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = mid[i];
      ws.forward();
      for (std::size_t s = 0; s < ws.spec_size(); ++s)
        ws.spec_buf()[s] *= kernels.h_hat[s];
      ws.inverse();
      KahanSum s;
      for (std::size_t i = 0; i < N; ++i) s.add(mid[i] * ws.real_buf()[i]);
      bracket += params.kappa * params.kappa * dt * s.value() * vol * vol;
    }

    // noise increment in ws.real_buf
    {
      double* re = ws.real_buf();
      for (std::size_t i = 0; i < N; ++i) re[i] = noise_sd * rng.next_normal();
      ws.forward();
      for (std::size_t s = 0; s < ws.spec_size(); ++s)
        ws.spec_buf()[s] *= kernels.g_hat[s] * vol;
      ws.inverse();
    }

    double mass_pre = 0.0, mass_post = 0.0;
    if (obs.track_quadratic_variation) {
      KahanSum s;
      for (std::size_t i = 0; i < N; ++i) s.add(mid[i]);
      mass_pre = s.value() * vol;
    }
    {
      const double* dv = ws.real_buf();
      for (std::size_t i = 0; i < N; ++i)
        mid[i] *= std::exp(params.kappa * dv[i] - ito);
    }
    if (obs.track_quadratic_variation) {
      KahanSum s;
      for (std::size_t i = 0; i < N; ++i) s.add(mid[i]);
      mass_post = s.value() * vol;
      realized_qv += (mass_post - mass_pre) * (mass_post - mass_pre);
    }

    const bool want_output =
        out_pos < out_steps.size() && out_steps[out_pos] == k + 1;
    if (want_output || k + 1 == steps) {
      heat_apply(mid, u_out, heat_half);
      record_outputs(k + 1, u_out);
      if (k + 1 < steps) heat_apply(u_out, mid, heat_half);
    } else {
      heat_apply(mid, mid, heat_full);
    }
  }

  if (keep_final_field) result.final_field = u_out;
  return result;
}

Observables simulate(const ModelParams& params, const MeasureSpec& mu,
                     double epsilon, const LatticeSpec& lattice, double t_end,
                     double dt, const ObservablesConfig& obs, SeedStream seed,
                     std::uint64_t run_index) {
  const LatticeKernels kernels =
      build_kernels(params, epsilon, lattice, /*tabulate_free=*/false);
  return simulate(params, mu, kernels, t_end, dt, obs, seed, run_index);
}

}  // namespace pam
