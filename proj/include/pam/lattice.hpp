#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pam/params.hpp"
#include "pam/rng.hpp"

namespace pam {

// Periodic d-dimensional lattice, n cells per side (power of two), box side
// L, row-major layout with the last axis fastest (FFTW convention).
struct LatticeSpec {
  int d = 3;
  int n = 32;
  double box_length = 4.0;

  double cell() const { return box_length / n; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
    return s;
  }
  double cell_volume() const { return std::pow(cell(), d); }

  void validate() const;

  // minimum-image distance of cell `idx` from the origin cell
  double min_image_radius(std::size_t idx) const;
  // minimum-image distance between cell centers
  double min_image_distance(std::size_t a, std::size_t b) const;
  // cell index of the cell whose center is nearest to x (coordinates folded)
  std::size_t index_of(const Eigen::VectorXd& x) const;
};

using Field = Eigen::ArrayXd;  // one value per cell, row-major

// Tabulated radial function on a log-spaced grid; epsilon = 0 means the
// unmollified kernel. Lookup is log-log linear between nodes.
struct RadialKernel {
  Eigen::ArrayXd radii;
  Eigen::ArrayXd values;
  double epsilon = 0.0;

  double operator()(double r) const;
};

// FFTW r2c/c2r workspace bound to one lattice. Not thread-safe; use one
// instance per worker. Plans are created under a global lock.
class Spectral {
 public:
  explicit Spectral(const LatticeSpec& spec);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  std::size_t real_size() const { return nreal_; }
  std::size_t spec_size() const { return nspec_; }

  double* real_buf() { return real_; }
  std::complex<double>* spec_buf() { return spec_; }

  void forward();  // real_buf -> spec_buf
  void inverse();  // spec_buf -> real_buf, divides by N

  // |k|^2 of each retained spectral mode (continuum wavevectors 2 pi m / L)
  const Eigen::ArrayXd& k_squared() const { return k2_; }

  // wavevector components of retained mode s
  void wavevector(std::size_t s, double* k_out) const;

  const LatticeSpec& spec() const { return lattice_; }

 private:
  LatticeSpec lattice_;
  std::size_t nreal_ = 0, nspec_ = 0;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
  Eigen::ArrayXd k2_;
};

// Mollified kernels attached to a lattice:
//  - free-space radial tabulations of g^eps and h^eps = g^eps * g^eps,
//  - the lattice sampling of g^eps and its spectrum,
//  - the circular self-convolution h (the covariance the synthesized noise
//    actually has, including periodization), and h(0) for the Ito factor.
struct LatticeKernels {
  LatticeSpec lattice;
  double epsilon = 0.0;
  RadialKernel g_free;
  RadialKernel h_free;
  Field g_lattice;
  Field h_lattice;
  Eigen::ArrayXd g_hat;  // real spectrum (g is even); used for synthesis
  Eigen::ArrayXd h_hat;  // = g_hat^2 * cell^d >= 0 by construction
  double h0 = 0.0;       // h_lattice at lag 0
  RadialKernel h_periodic_radial;  // shell average of h_lattice

  double h_periodic(std::size_t lag_index) const { return h_lattice[lag_index]; }
};

// tabulate_free controls the (quadrature-heavy) free-space h^eps table;
// the integrators only need the lattice-side arrays.
LatticeKernels build_kernels(const ModelParams& params, double epsilon,
                             const LatticeSpec& lattice,
                             bool tabulate_free = true);

struct NoiseIncrement {
  Field field;
  double dt = 0.0;
  double epsilon = 0.0;
};

// White noise of per-cell variance dt/cell^d convolved with g^eps on the
// lattice (spectrally); stationary covariance dt * h_lattice by construction.
NoiseIncrement sample_noise_increment(const LatticeKernels& kernels, double dt,
                                      Philox& rng);

// In-place variant used by the integrators: fills ws.real_buf with the
// increment, drawing n^d normals from `rng`.
void fill_noise_increment(const LatticeKernels& kernels, double dt,
                          Philox& rng, Spectral& ws);

struct CovarianceRow {
  std::vector<int> lag;  // in cells
  double expected = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

// Spatial-average covariance estimates per lag with leave-one-out jackknife
// standard errors; needs >= 100 increments.
std::vector<CovarianceRow> empirical_covariance(
    const LatticeKernels& kernels,
    const std::vector<NoiseIncrement>& increments,
    const std::vector<std::vector<int>>& lags);

// Streaming variant: synthesizes the increments itself (one substream per
// increment) so large ensembles never sit in memory.
std::vector<CovarianceRow> empirical_covariance_stream(
    const LatticeKernels& kernels, double dt, std::size_t n_increments,
    const std::vector<std::vector<int>>& lags, SeedStream seed);

// squared min-image distance of every cell center to `center`
Field distance_squared_map(const LatticeSpec& spec,
                           const Eigen::VectorXd& center);

// Flat binary snapshot: header (int32 d, int32 n_per_side, float64
// box_length, float64 dt, float64 epsilon), then row-major float64 cells.
void write_field_snapshot(const std::string& path, const LatticeSpec& spec,
                          const Field& field, double dt, double epsilon);
Field read_field_snapshot(const std::string& path, LatticeSpec* spec_out,
                          double* dt_out, double* epsilon_out);

}  // namespace pam
