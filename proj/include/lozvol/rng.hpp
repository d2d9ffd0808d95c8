#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lozvol/common.hpp"

namespace lozvol {

/// Deterministic random stream. Distributions are hand-rolled on top of
/// mt19937_64 so that sequences do not depend on the standard library
/// implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<uint64_t>(hi - lo + 1));
  }

  /// Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Vector gaussian_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /// Uniform direction on the Euclidean unit sphere.
  Vector unit_vector(int n) {
    Vector v;
    double norm = 0.0;
    do {
      v = gaussian_vector(n);
      norm = v.norm();
    } while (norm < 1e-150);
    return v / norm;
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lozvol
