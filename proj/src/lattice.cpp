#include "pam/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "pam/special.hpp"
#include "pam/stats.hpp"

namespace pam {

namespace {
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void LatticeSpec::validate() const {
  if (d < 1) throw std::invalid_argument("LatticeSpec: d >= 1");
  if (n < 8 || (n & (n - 1)) != 0)
    throw std::invalid_argument(
        "LatticeSpec: n_per_side must be a power of two >= 8");
  if (!(box_length > 0.0))
    throw std::invalid_argument("LatticeSpec: box_length > 0");
}

double LatticeSpec::min_image_radius(std::size_t idx) const {
  double r2 = 0.0;
  for (int ax = d - 1; ax >= 0; --ax) {
    int i = static_cast<int>(idx % n);
    idx /= n;
    if (i > n / 2) i -= n;
    r2 += static_cast<double>(i) * i;
  }
  return cell() * std::sqrt(r2);
}

double LatticeSpec::min_image_distance(std::size_t a, std::size_t b) const {
  double r2 = 0.0;
  for (int ax = d - 1; ax >= 0; --ax) {
    int ia = static_cast<int>(a % n), ib = static_cast<int>(b % n);
    a /= n;
    b /= n;
    int di = ia - ib;
    if (di > n / 2) di -= n;
    if (di < -n / 2) di += n;
    r2 += static_cast<double>(di) * di;
  }
  return cell() * std::sqrt(r2);
}

std::size_t LatticeSpec::index_of(const Eigen::VectorXd& x) const {
  if (x.size() != d) throw std::invalid_argument("index_of: dim mismatch");
  std::size_t idx = 0;
  for (int ax = 0; ax < d; ++ax) {
    double u = x[ax] / cell();
    long i = std::lround(u);
    i %= n;
    if (i < 0) i += n;
    idx = idx * n + static_cast<std::size_t>(i);
  }
  return idx;
}

double RadialKernel::operator()(double r) const {
  if (radii.size() == 0) throw std::logic_error("RadialKernel: empty");
  if (r <= radii[0]) return values[0];
  const Eigen::Index m = radii.size();
  if (r >= radii[m - 1]) {
    // extend with the log-log slope of the last segment
    const double s = std::log(values[m - 1] / values[m - 2]) /
                     std::log(radii[m - 1] / radii[m - 2]);
    return values[m - 1] * std::pow(r / radii[m - 1], s);
  }
  // binary search + log-log interpolation
  Eigen::Index lo = 0, hi = m - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (radii[mid] <= r ? lo : hi) = mid;
  }
  const double w = std::log(r / radii[lo]) / std::log(radii[hi] / radii[lo]);
  return std::exp((1.0 - w) * std::log(values[lo]) +
                  w * std::log(values[hi]));
}

Spectral::Spectral(const LatticeSpec& spec) : lattice_(spec) {
  spec.validate();
  nreal_ = spec.size();
  nspec_ = nreal_ / spec.n * (spec.n / 2 + 1);

  std::vector<int> dims(spec.d, spec.n);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    real_ = fftw_alloc_real(nreal_);
    spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(nspec_));
    plan_fwd_ = fftw_plan_dft_r2c(spec.d, dims.data(), real_,
                                  reinterpret_cast<fftw_complex*>(spec_),
                                  FFTW_MEASURE | FFTW_DESTROY_INPUT);
    plan_inv_ = fftw_plan_dft_c2r(spec.d, dims.data(),
                                  reinterpret_cast<fftw_complex*>(spec_),
                                  real_, FFTW_MEASURE | FFTW_DESTROY_INPUT);
  }
  if (!plan_fwd_ || !plan_inv_) throw std::runtime_error("fftw plan failed");

  // |k|^2 per retained mode, continuum wavevectors
  k2_.resize(nspec_);
  const double dk = 2.0 * M_PI / spec.box_length;
  const int nh = spec.n / 2 + 1;
  for (std::size_t s = 0; s < nspec_; ++s) {
    std::size_t rem = s;
    const int last = static_cast<int>(rem % nh);
    rem /= nh;
    double k2 = static_cast<double>(last) * last;
    for (int ax = spec.d - 2; ax >= 0; --ax) {
      int m = static_cast<int>(rem % spec.n);
      rem /= spec.n;
      if (m > spec.n / 2) m -= spec.n;
      k2 += static_cast<double>(m) * m;
    }
    k2_[s] = k2 * dk * dk;
  }
}

void Spectral::wavevector(std::size_t s, double* k_out) const {
  const double dk = 2.0 * M_PI / lattice_.box_length;
  const int nh = lattice_.n / 2 + 1;
  std::size_t rem = s;
  k_out[lattice_.d - 1] = dk * static_cast<double>(rem % nh);
  rem /= nh;
  for (int ax = lattice_.d - 2; ax >= 0; --ax) {
    int m = static_cast<int>(rem % lattice_.n);
    rem /= lattice_.n;
    if (m > lattice_.n / 2) m -= lattice_.n;
    k_out[ax] = dk * m;
  }
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lock(fftw_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_);
  fftw_free(spec_);
}

void Spectral::forward() {
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
}

void Spectral::inverse() {
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double inv_n = 1.0 / static_cast<double>(nreal_);
  for (std::size_t i = 0; i < nreal_; ++i) real_[i] *= inv_n;
}

LatticeKernels build_kernels(const ModelParams& params, double epsilon,
                             const LatticeSpec& lattice, bool tabulate_free) {
  lattice.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_kernels: eps > 0");
  if (lattice.d != params.d)
    throw std::invalid_argument("build_kernels: lattice dim != model dim");
  if (lattice.cell() >= 0.5 * epsilon)
    throw std::invalid_argument(
        "build_kernels: cell >= eps/2, mollifier under-resolved on this "
        "lattice");

  LatticeKernels K;
  K.lattice = lattice;
  K.epsilon = epsilon;

  const int d = params.d;

  // free-space tabulations on a log grid from cell/4 out to 4L
  {
    const int npts = tabulate_free ? 160 : 24;
    const double r0 = 0.25 * lattice.cell(), r1 = 4.0 * lattice.box_length;
    K.g_free.radii.resize(npts);
    K.g_free.values.resize(npts);
    K.g_free.epsilon = epsilon;
    for (int i = 0; i < npts; ++i) {
      const double r = r0 * std::pow(r1 / r0, i / (npts - 1.0));
      K.g_free.radii[i] = r;
      K.g_free.values[i] = g_eps(d, epsilon, r);
    }
    if (tabulate_free) {
      K.h_free.radii = K.g_free.radii;
      K.h_free.values.resize(npts);
      K.h_free.epsilon = epsilon;
      for (int i = 0; i < npts; ++i)
        K.h_free.values[i] = h_eps_free(d, epsilon, K.h_free.radii[i], 1e-7);
    }
  }

  // lattice sampling of g^eps (minimum image) and its spectrum
  Spectral ws(lattice);
  const std::size_t N = lattice.size();
  K.g_lattice.resize(N);
  for (std::size_t i = 0; i < N; ++i)
    K.g_lattice[i] = g_eps(d, epsilon, lattice.min_image_radius(i));

  for (std::size_t i = 0; i < N; ++i) ws.real_buf()[i] = K.g_lattice[i];
  ws.forward();
  K.g_hat.resize(ws.spec_size());
  for (std::size_t s = 0; s < ws.spec_size(); ++s) {
    // even kernel: spectrum is real up to roundoff
    K.g_hat[s] = ws.spec_buf()[s].real();
  }

  // circular self-convolution h = g (*) g * cell^d via the spectrum
  const double vol = lattice.cell_volume();
  K.h_hat.resize(ws.spec_size());
  for (std::size_t s = 0; s < ws.spec_size(); ++s) {
    K.h_hat[s] = K.g_hat[s] * K.g_hat[s] * vol;
    ws.spec_buf()[s] = K.h_hat[s];
  }
  ws.inverse();
  K.h_lattice.resize(N);
  for (std::size_t i = 0; i < N; ++i) K.h_lattice[i] = ws.real_buf()[i];
  K.h0 = K.h_lattice[0];

  // radial shell average of the periodized kernel (half-cell bins)
  {
    const double bin = 0.5 * lattice.cell();
    const int nb = static_cast<int>(lattice.box_length / bin) + 2;
    std::vector<double> sum(nb, 0.0);
    std::vector<std::size_t> cnt(nb, 0);
    for (std::size_t i = 0; i < N; ++i) {
      const double r = lattice.min_image_radius(i);
      const int b = static_cast<int>(r / bin);
      if (b < nb) {
        sum[b] += K.h_lattice[i];
        ++cnt[b];
      }
    }
    std::vector<double> rs, vs;
    for (int b = 0; b < nb; ++b)
      if (cnt[b] > 0 && sum[b] > 0.0) {
        rs.push_back((b + 0.5) * bin);
        vs.push_back(sum[b] / cnt[b]);
      }
    K.h_periodic_radial.radii =
        Eigen::Map<Eigen::ArrayXd>(rs.data(), rs.size());
    K.h_periodic_radial.values =
        Eigen::Map<Eigen::ArrayXd>(vs.data(), vs.size());
    K.h_periodic_radial.epsilon = epsilon;
  }
  return K;
}

void fill_noise_increment(const LatticeKernels& kernels, double dt,
                          Philox& rng, Spectral& ws) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise increment: dt > 0");
  const std::size_t N = kernels.lattice.size();
  const double sd = std::sqrt(dt / kernels.lattice.cell_volume());
  double* re = ws.real_buf();
  for (std::size_t i = 0; i < N; ++i) re[i] = sd * rng.next_normal();
  ws.forward();
  const double vol = kernels.lattice.cell_volume();
  auto* sp = ws.spec_buf();
  for (std::size_t s = 0; s < ws.spec_size(); ++s)
    sp[s] *= kernels.g_hat[s] * vol;
  ws.inverse();
}

NoiseIncrement sample_noise_increment(const LatticeKernels& kernels, double dt,
                                      Philox& rng) {
  Spectral ws(kernels.lattice);
  fill_noise_increment(kernels, dt, rng, ws);
  NoiseIncrement inc;
  inc.dt = dt;
  inc.epsilon = kernels.epsilon;
  inc.field.resize(kernels.lattice.size());
  for (std::size_t i = 0; i < kernels.lattice.size(); ++i)
    inc.field[i] = ws.real_buf()[i];
  return inc;
}

namespace {

// mean over cells of f(x) f(x+lag) with periodic wrap
double spatial_lag_product(const LatticeSpec& L, const Field& f,
                           const std::vector<int>& lag) {
  const std::size_t N = L.size();
  // per-axis tables of shifted-index contributions
  std::vector<std::vector<std::size_t>> table(L.d);
  std::size_t stride = 1;
  for (int ax = L.d - 1; ax >= 0; --ax) {
    table[ax].resize(L.n);
    for (int i = 0; i < L.n; ++i) {
      int v = (i + lag[ax]) % L.n;
      if (v < 0) v += L.n;
      table[ax][i] = static_cast<std::size_t>(v) * stride;
    }
    stride *= static_cast<std::size_t>(L.n);
  }
  std::vector<int> digit(L.d, 0);
  std::size_t shifted = 0;
  for (int ax = 0; ax < L.d; ++ax) shifted += table[ax][0];
  KahanSum acc;
  for (std::size_t i = 0; i < N; ++i) {
    acc.add(f[i] * f[shifted]);
    // odometer increment, last axis fastest
    for (int ax = L.d - 1; ax >= 0; --ax) {
      shifted -= table[ax][digit[ax]];
      if (++digit[ax] < L.n) {
        shifted += table[ax][digit[ax]];
        break;
      }
      digit[ax] = 0;
      shifted += table[ax][0];
    }
  }
  return acc.value() / static_cast<double>(N);
}

std::size_t lag_to_index(const LatticeSpec& L, const std::vector<int>& lag) {
  std::size_t idx = 0;
  for (int ax = 0; ax < L.d; ++ax) {
    int v = lag[ax] % L.n;
    if (v < 0) v += L.n;
    idx = idx * L.n + static_cast<std::size_t>(v);
  }
  return idx;
}

std::vector<CovarianceRow> covariance_from_products(
    const LatticeKernels& kernels, const std::vector<std::vector<int>>& lags,
    const std::vector<std::vector<double>>& per_lag_products, double dt) {
  std::vector<CovarianceRow> rows;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const auto& per_inc = per_lag_products[li];
    const double total = kahan_total(per_inc);
    const double M = static_cast<double>(per_inc.size());
    const double mean = total / M;
    // leave-one-out jackknife of the mean
    double ss = 0.0;
    for (double v : per_inc) {
      const double loo = (total - v) / (M - 1.0);
      ss += (loo - mean) * (loo - mean);
    }
    CovarianceRow row;
    row.lag = lags[li];
    row.estimate = mean;
    row.std_error = std::sqrt((M - 1.0) / M * ss);
    row.expected = dt * kernels.h_lattice[lag_to_index(kernels.lattice, lags[li])];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<CovarianceRow> empirical_covariance(
    const LatticeKernels& kernels,
    const std::vector<NoiseIncrement>& increments,
    const std::vector<std::vector<int>>& lags) {
  if (increments.size() < 100)
    throw std::invalid_argument("empirical_covariance: need >= 100 increments");
  const LatticeSpec& L = kernels.lattice;
  for (const auto& lag : lags)
    if (static_cast<int>(lag.size()) != L.d)
      throw std::invalid_argument("empirical_covariance: lag dim mismatch");

  std::vector<std::vector<double>> products(
      lags.size(), std::vector<double>(increments.size()));
  for (std::size_t j = 0; j < increments.size(); ++j) {
    if (static_cast<std::size_t>(increments[j].field.size()) != L.size())
      throw std::invalid_argument("empirical_covariance: field size");
    for (std::size_t li = 0; li < lags.size(); ++li)
      products[li][j] = spatial_lag_product(L, increments[j].field, lags[li]);
  }
  return covariance_from_products(kernels, lags, products,
                                  increments.front().dt);
}

std::vector<CovarianceRow> empirical_covariance_stream(
    const LatticeKernels& kernels, double dt, std::size_t n_increments,
    const std::vector<std::vector<int>>& lags, SeedStream seed) {
  if (n_increments < 100)
    throw std::invalid_argument("empirical_covariance: need >= 100 increments");
  const LatticeSpec& L = kernels.lattice;
  for (const auto& lag : lags)
    if (static_cast<int>(lag.size()) != L.d)
      throw std::invalid_argument("empirical_covariance: lag dim mismatch");

  Spectral ws(L);
  Field f(L.size());
  std::vector<std::vector<double>> products(
      lags.size(), std::vector<double>(n_increments));
  for (std::size_t j = 0; j < n_increments; ++j) {
    Philox g(seed.master, seed.stream, j);
    fill_noise_increment(kernels, dt, g, ws);
    for (std::size_t i = 0; i < L.size(); ++i) f[i] = ws.real_buf()[i];
    for (std::size_t li = 0; li < lags.size(); ++li)
      products[li][j] = spatial_lag_product(L, f, lags[li]);
  }
  return covariance_from_products(kernels, lags, products, dt);
}

namespace {
inline double fold_disp(double v, double L) {
  v = std::fmod(v, L);
  if (v < -0.5 * L) v += L;
  if (v >= 0.5 * L) v -= L;
  return v;
}
}  // namespace

Field distance_squared_map(const LatticeSpec& spec,
                           const Eigen::VectorXd& center) {
  if (center.size() != spec.d)
    throw std::invalid_argument("distance map: dim mismatch");
  const std::size_t N = spec.size();
  Field out(N);
  std::vector<int> digit(spec.d, 0);
  std::vector<double> dx(spec.d);
  const double L = spec.box_length, cell = spec.cell();
  for (int ax = 0; ax < spec.d; ++ax) dx[ax] = fold_disp(-center[ax], L);
  for (std::size_t i = 0; i < N; ++i) {
    double r2 = 0.0;
    for (int ax = 0; ax < spec.d; ++ax) r2 += dx[ax] * dx[ax];
    out[i] = r2;
    for (int ax = spec.d - 1; ax >= 0; --ax) {
      if (++digit[ax] < spec.n) {
        dx[ax] = fold_disp(digit[ax] * cell - center[ax], L);
        break;
      }
      digit[ax] = 0;
      dx[ax] = fold_disp(-center[ax], L);
    }
  }
  return out;
}

void write_field_snapshot(const std::string& path, const LatticeSpec& spec,
                          const Field& field, double dt, double epsilon) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const std::int32_t d = spec.d, n = spec.n;
  const double L = spec.box_length;
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  out.write(reinterpret_cast<const char*>(&dt), sizeof dt);
  out.write(reinterpret_cast<const char*>(&epsilon), sizeof epsilon);
  out.write(reinterpret_cast<const char*>(field.data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write: " + path);
}

Field read_field_snapshot(const std::string& path, LatticeSpec* spec_out,
                          double* dt_out, double* epsilon_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::int32_t d = 0, n = 0;
  double L = 0, dt = 0, eps = 0;
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  in.read(reinterpret_cast<char*>(&dt), sizeof dt);
  in.read(reinterpret_cast<char*>(&eps), sizeof eps);
  LatticeSpec spec;
  spec.d = d;
  spec.n = n;
  spec.box_length = L;
  Field f(spec.size());
  in.read(reinterpret_cast<char*>(f.data()),
          static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!in) throw std::runtime_error("short read: " + path);
  if (spec_out) *spec_out = spec;
  if (dt_out) *dt_out = dt;
  if (epsilon_out) *epsilon_out = eps;
  return f;
}

}  // namespace pam
