#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lozvol/common.hpp"
#include "lozvol/norm.hpp"
#include "lozvol/subspace.hpp"
#include "lozvol/volume.hpp"

namespace lozvol {

/// Exact second moment matrix of a symmetric polytope: integral of x x^T
/// over the body, by fan triangulation from the origin and the closed-form
/// simplex moment.
Matrix covariance_polytope(const PolytopeV& body);

struct McMoments {
  Matrix second_moment;    // estimate of the integral of x x^T
  Matrix std_error;        // per-entry standard errors
  double volume = 0.0;
  double volume_std_error = 0.0;
};

McMoments covariance_mc(const PolytopeV& body, long samples, uint64_t seed);
McMoments covariance_mc(const GaugeBody& body, long samples, uint64_t seed);

struct IsotropyReport {
  Matrix map;          // A with |A(K)| = 1 and cov(A(K)) = L^2 I
  Matrix inverse_map;
  double l_constant = 0.0;
  double cov_residual = 0.0;   // max |cov_ij - L^2 delta_ij|
  double volume_check = 0.0;   // | |A(K)| - 1 |
  bool monte_carlo = false;
};

struct IsotropicBody {
  PolytopeV body;
  IsotropyReport report;
};

/// Affine image in isotropic position (exact path; polytopes only).
IsotropicBody to_isotropic(const PolytopeV& body);

/// Monte Carlo variant for gauge bodies; returns the map and an approximate
/// L with residuals measured against resampled moments.
IsotropyReport to_isotropic_mc(const GaugeBody& body, long samples, uint64_t seed);

struct Pi1Estimate {
  double lower_bound = 0.0;
  std::vector<Vector> witness_family;
  int family_size = 0;
};

/// Lower bound for pi_1(iota*) of the formal identity into E_K: max over
/// candidate families of sum |a_j|_2 / sup_{y in K} sum |<y, a_j>|. The sup
/// is exact (vertex maximum) for polytopal K. Candidate families: the
/// standard basis plus one Gaussian family per entry of `family_sizes`
/// (seeded per size, so enlarging the size list never decreases the bound).
Pi1Estimate pi1_lower_bound(const PolytopeV& isotropic_body, uint64_t seed,
                            const std::vector<int>& family_sizes = {});

struct BoundCheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant_used = 0.0;
  double margin = 0.0;  // rhs / lhs
  bool pass = false;
  bool skipped = false;       // degenerate cases (k = 1 sections)
  double min_constant = 0.0;  // smallest constant that would pass (theorem 4)
  double max_section = 0.0;
  double l_constant = 0.0;    // where isotropy is involved
};

struct CheckOptions {
  int section_budget = 64;
  long mc_samples = 200000;
  uint64_t seed = 31;
};

/// |B_E|^((k-1)/k) <= 2e sqrt(6 + 3 ln(n/k)) * max central section of B_E.
BoundCheckReport check_theorem3(const UnconditionalNorm& norm,
                                const SubspaceBasis& subspace,
                                const CheckOptions& opts = {});

/// |B_E|^((k-1)/k) <= C (1 + ln n) * max central section for the quotient
/// ball B_E = Q(B_X); C defaults to 2e sqrt(6) and is reported.
BoundCheckReport check_theorem4(const UnconditionalNorm& norm, const Matrix& quotient,
                                double constant = 0.0, const CheckOptions& opts = {});

/// L_K * pi1_lower_bound(K) <= 2 sqrt(2) for isotropic K. The body is
/// normalized to isotropic position first (a no-op when already isotropic).
BoundCheckReport check_lemma3(const PolytopeV& body, uint64_t seed = 17);

/// Coarse two-sided sanity band: max central section * L_K in [0.2, 2] for
/// isotropic polytopes.
BoundCheckReport hensley_band(const PolytopeV& isotropic_body, double l_constant,
                              const CheckOptions& opts = {});

}  // namespace lozvol
