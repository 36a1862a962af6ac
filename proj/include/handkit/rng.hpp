#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <random>

namespace handkit {

// Seeded generator with hand-rolled distributions so that identical seeds
// produce identical streams on every standard library. std::mt19937_64 output
// is fixed by the standard; the distributions in <random> are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; one value per call, the pair mate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  Eigen::Vector3d unit_vector3() {
    // Marsaglia-style: normalize a Gaussian triple.
    Eigen::Vector3d v;
    do {
      v = Eigen::Vector3d(normal(), normal(), normal());
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

  // Uniform over SO(3) (Shoemake quaternion sampling).
  Eigen::Matrix3d rotation_uniform() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    Eigen::Quaterniond q(s1 * std::sin(2.0 * M_PI * u2),
                         s1 * std::cos(2.0 * M_PI * u2),
                         s2 * std::sin(2.0 * M_PI * u3),
                         s2 * std::cos(2.0 * M_PI * u3));
    return q.normalized().toRotationMatrix();
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace handkit
