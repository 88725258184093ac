#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace pam {

// Radial test functions with closed-form heat convolutions: a Gaussian bump
// A exp(-|x-c|^2 / 2w^2) and a smoothed ball indicator (C^inf logistic edge).
struct TestFunction {
  enum class Kind { kGaussianBump, kSmoothBall };
  Kind kind = Kind::kGaussianBump;
  Eigen::VectorXd center;
  double amplitude = 1.0;
  double width = 0.5;   // gaussian: std dev; smooth ball: edge width
  double radius = 1.0;  // smooth ball only

  static TestFunction gaussian(Eigen::VectorXd c, double amp, double w) {
    TestFunction f;
    f.kind = Kind::kGaussianBump;
    f.center = std::move(c);
    f.amplitude = amp;
    f.width = w;
    return f;
  }
  static TestFunction smooth_ball(Eigen::VectorXd c, double r, double edge) {
    TestFunction f;
    f.kind = Kind::kSmoothBall;
    f.center = std::move(c);
    f.radius = r;
    f.width = edge;
    f.amplitude = 1.0;
    return f;
  }

  double radial(double r) const {
    switch (kind) {
      case Kind::kGaussianBump:
        return amplitude * std::exp(-0.5 * r * r / (width * width));
      case Kind::kSmoothBall:
        return amplitude / (1.0 + std::exp((r - radius) / width));
    }
    return 0.0;
  }

  double operator()(const Eigen::VectorXd& x) const {
    if (x.size() != center.size())
      throw std::invalid_argument("TestFunction: dim mismatch");
    return radial((x - center).norm());
  }

  // effective support radius used for box-size sanity checks
  double support_radius() const {
    return kind == Kind::kGaussianBump ? 6.0 * width : radius + 8.0 * width;
  }
};

}  // namespace pam
