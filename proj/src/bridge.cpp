#include "pam/bridge.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "pam/parallel.hpp"

namespace pam {

namespace {

// stack-allocated point for the hot loops (d <= 16 is plenty here)
using Pt = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 16, 1>;

void check_dims(int d, const Point& start, const Point& end) {
  if (d < 1 || start.size() != d || end.size() != d)
    throw std::invalid_argument("bridge: start/end dimension mismatch");
}

// one conditioning step of the bridge; remaining = T - t_i
inline void bridge_step(Pt& x, const Pt& end, double remaining, double dt,
                        Philox& g) {
  const double w = dt / remaining;
  const double sd = std::sqrt(dt * (remaining - dt) / remaining);
  for (Eigen::Index k = 0; k < x.size(); ++k)
    x[k] += (end[k] - x[k]) * w + sd * g.next_normal();
}

}  // namespace

BridgePath sample_brownian_bridge(int d, const Point& start, const Point& end,
                                  double t, int m, SeedStream seed,
                                  std::uint64_t path_index) {
  check_dims(d, start, end);
  if (!(t > 0.0)) throw std::invalid_argument("bridge: t must be > 0");
  if (m < 2) throw std::invalid_argument("bridge: need m >= 2 grid steps");

  BridgePath path;
  path.times.resize(m + 1);
  path.positions.resize(m + 1, d);
  const double dt = t / m;
  for (int i = 0; i <= m; ++i) path.times[i] = t * i / m;

  Philox g(seed.master, seed.stream, path_index);
  Pt x = start;
  path.positions.row(0) = start.transpose();
  for (int i = 0; i < m - 1; ++i) {
    bridge_step(x, end, t - path.times[i], dt, g);
    path.positions.row(i + 1) = x.transpose();
  }
  path.positions.row(m) = end.transpose();  // pin bit-exactly
  return path;
}

std::vector<double> exp_functional_samples(int d, double eta,
                                           const Point& start,
                                           const Point& end, double t, int m,
                                           std::size_t n_paths, double clip,
                                           SeedStream seed, int workers,
                                           double* clip_fraction) {
  check_dims(d, start, end);
  alpha_of_eta(d, eta);  // validates d >= 3 and the eta window
  if (!(clip > 0.0)) throw std::invalid_argument("exp_functional_mc: clip > 0");
  if (m < 2) throw std::invalid_argument("exp_functional_mc: m >= 2");
  if (start.squaredNorm() == 0.0 && end.squaredNorm() == 0.0)
    throw std::invalid_argument(
        "exp_functional_mc: start == end == 0 leaves the integrand infinite "
        "at both endpoints");

  const double dt = t / m;
  std::vector<double> values(n_paths);
  std::vector<std::uint8_t> clipped(n_paths, 0);
  const Pt s0 = start, e0 = end;

  parallel_for_indexed(n_paths, workers, [&](std::size_t i) {
    Philox g(seed.master, seed.stream, i);
    Pt x = s0;
    bool hit = false;
    auto integrand = [&](const Pt& p) {
      const double inv = 1.0 / p.squaredNorm();
      if (inv >= clip) {
        hit = true;
        return clip;
      }
      return inv;
    };
    double acc = 0.5 * integrand(x);
    for (int k = 0; k < m - 1; ++k) {
      bridge_step(x, e0, t - dt * k, dt, g);
      acc += integrand(x);
    }
    acc += 0.5 * (e0.squaredNorm() > 0.0 ? integrand(e0) : clip);
    if (e0.squaredNorm() == 0.0) hit = true;
    values[i] = std::exp(eta * acc * dt);
    clipped[i] = hit ? 1 : 0;
  });

  if (clip_fraction) {
    std::size_t nclip = 0;
    for (auto c : clipped) nclip += c;
    *clip_fraction = static_cast<double>(nclip) / n_paths;
  }
  return values;
}

MCEstimate exp_functional_mc(int d, double eta, const Point& start,
                             const Point& end, double t, int m,
                             std::size_t n_paths, double clip, SeedStream seed,
                             int workers) {
  if (eta == 0.0) {
    MCEstimate est;
    est.mean = 1.0;
    est.std_error = 0.0;
    est.n_samples = n_paths;
    return est;
  }
  double cf = 0.0;
  auto values = exp_functional_samples(d, eta, start, end, t, m, n_paths, clip,
                                       seed, workers, &cf);
  return reduce_samples(values, cf);
}

BinnedEstimate bessel_binned_exp_moment(int d, double eta, double a, double b,
                                        double bin_halfwidth, double t, int m,
                                        std::size_t n_paths, SeedStream seed,
                                        int workers) {
  alpha_of_eta(d, eta);
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("bessel_binned: need a, b > 0");
  if (!(bin_halfwidth > 0.0) || bin_halfwidth >= b)
    throw std::invalid_argument("bessel_binned: need 0 < delta < b");

  const double dt = t / m;
  const double sd = std::sqrt(dt);
  const double lo = b - bin_halfwidth, hi = b + bin_halfwidth;

  // per-path record: exp value if the endpoint landed in the bin, else NaN
  std::vector<double> record(n_paths);
  parallel_for_indexed(n_paths, workers, [&](std::size_t i) {
    Philox g(seed.master, seed.stream, i);
    Pt x(d);
    x.setZero();
    x[0] = a;
    double acc = 0.5 / x.squaredNorm();
    for (int k = 0; k < m; ++k) {
      for (int c = 0; c < d; ++c) x[c] += sd * g.next_normal();
      const double inv = 1.0 / x.squaredNorm();
      acc += (k == m - 1) ? 0.5 * inv : inv;
    }
    const double r = std::sqrt(x.squaredNorm());
    record[i] = (r >= lo && r <= hi) ? std::exp(eta * acc * dt)
                                     : std::numeric_limits<double>::quiet_NaN();
  });

  std::vector<double> hits;
  hits.reserve(n_paths / 16);
  for (double v : record)
    if (!std::isnan(v)) hits.push_back(v);

  if (hits.empty())
    throw std::runtime_error(
        "bessel_binned: insufficient samples, no path ended in the bin");

  BinnedEstimate out;
  out.estimate = reduce_samples(hits);
  out.n_total = n_paths;
  out.bin_probability = static_cast<double>(hits.size()) / n_paths;
  return out;
}

MCEstimate pair_interaction_mc(const ModelParams& params,
                               const std::vector<Point>& starts,
                               const std::vector<Point>& ends, double t, int m,
                               std::size_t n_paths, double clip,
                               SeedStream seed, int workers) {
  const int n = static_cast<int>(starts.size());
  const int d = params.d;
  if (n < 2 || ends.size() != starts.size())
    throw std::invalid_argument("pair_interaction_mc: need n >= 2 bridges");
  for (const auto& p : starts) check_dims(d, p, p);
  for (const auto& p : ends) check_dims(d, p, p);
  if (!(clip > 0.0)) throw std::invalid_argument("pair_interaction_mc: clip");
  if (m < 2) throw std::invalid_argument("pair_interaction_mc: m >= 2");

  const double k2 = params.kappa * params.kappa;
  const double dt = t / m;
  std::vector<Pt> starts_buf(starts.begin(), starts.end());
  std::vector<Pt> ends_buf(ends.begin(), ends.end());

  std::vector<double> values(n_paths);
  std::vector<std::uint8_t> clipped(n_paths, 0);

  parallel_for_indexed(n_paths, workers, [&](std::size_t i) {
    Philox g(seed.master, seed.stream, i);
    std::vector<Pt> x(starts_buf.begin(), starts_buf.end());
    bool hit = false;
    auto interaction = [&]() {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          const double inv = 1.0 / (x[j] - x[k]).squaredNorm();
          if (inv >= clip) {
            hit = true;
            s += clip;
          } else {
            s += inv;
          }
        }
      return s;
    };
    double acc = 0.5 * interaction();
    for (int step = 0; step < m - 1; ++step) {
      const double remaining = t - dt * step;
      for (int j = 0; j < n; ++j) bridge_step(x[j], ends_buf[j], remaining, dt, g);
      acc += interaction();
    }
    x = ends_buf;
    acc += 0.5 * interaction();
    values[i] = std::exp(k2 * acc * dt);
    clipped[i] = hit ? 1 : 0;
  });

  std::size_t nclip = 0;
  for (auto c : clipped) nclip += c;
  return reduce_samples(values, static_cast<double>(nclip) / n_paths);
}

}  // namespace pam
