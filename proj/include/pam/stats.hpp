#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pam {

// Universal statistical return type of the Monte Carlo engines.
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double clip_fraction = 0.0;  // fraction of paths where the cap activated
};

// Kahan-compensated accumulator; reductions over sample vectors are done in
// index order so that results do not depend on the worker count.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Mean and standard error from per-sample values, fixed reduction order.
inline MCEstimate reduce_samples(std::span<const double> xs,
                                 double clip_fraction = 0.0) {
  if (xs.empty()) throw std::invalid_argument("reduce_samples: empty input");
  MCEstimate est;
  est.n_samples = xs.size();
  est.clip_fraction = clip_fraction;
  est.mean = kahan_total(xs) / static_cast<double>(xs.size());
  KahanSum sq;
  for (double x : xs) {
    const double dxi = x - est.mean;
    sq.add(dxi * dxi);
  }
  if (xs.size() > 1) {
    const double var = sq.value() / static_cast<double>(xs.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return est;
}

inline double sample_kurtosis(std::span<const double> xs) {
  const MCEstimate e = reduce_samples(xs);
  if (e.std_error == 0.0) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double sd = e.std_error * std::sqrt(n);
  KahanSum m4;
  for (double x : xs) {
    const double z = (x - e.mean) / sd;
    m4.add(z * z * z * z);
  }
  return m4.value() / n;
}

// Pearson correlation with a normal-approximation standard error 1/sqrt(n).
inline double sample_correlation(std::span<const double> xs,
                                 std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("sample_correlation: size mismatch");
  const double n = static_cast<double>(xs.size());
  const double mx = kahan_total(xs) / n;
  const double my = kahan_total(ys) / n;
  KahanSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy.add((xs[i] - mx) * (ys[i] - my));
    sxx.add((xs[i] - mx) * (xs[i] - mx));
    syy.add((ys[i] - my) * (ys[i] - my));
  }
  const double den = std::sqrt(sxx.value() * syy.value());
  return den > 0.0 ? sxy.value() / den : 0.0;
}

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic two-sample critical value at level `alpha`:
// c(alpha) * sqrt((n+m)/(n m)) with c = sqrt(-ln(alpha/2)/2).
inline double ks_critical_value(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) /
                       (static_cast<double>(n) * static_cast<double>(m)));
}

// One-sided z test that the paired differences have negative mean.
// Returns the z score; z < -z_crit rejects "mean >= 0".
inline double paired_diff_zscore(std::span<const double> before,
                                 std::span<const double> after) {
  if (before.size() != after.size() || before.empty())
    throw std::invalid_argument("paired_diff_zscore: size mismatch");
  std::vector<double> diff(before.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = after[i] - before[i];
  const MCEstimate e = reduce_samples(diff);
  return e.std_error > 0.0 ? e.mean / e.std_error : 0.0;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need matching n >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace pam
