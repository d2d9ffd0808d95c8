#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lozvol/common.hpp"
#include "lozvol/lozanovskii.hpp"
#include "lozvol/norm.hpp"
#include "lozvol/volume.hpp"

namespace lozvol {

/// Orthonormal description of H = T(E) inside l1^n together with the
/// projected standard unit vectors x_j = P(f_j) expressed in that frame.
struct ProjectionFrame {
  Matrix h_basis;  // k x n; orthonormal rows spanning H

  int ambient_dim() const { return static_cast<int>(h_basis.cols()); }
  int sub_dim() const { return static_cast<int>(h_basis.rows()); }
  /// x_j, the coordinates of the orthogonal projection of f_j onto H.
  Vector generator(int j) const { return h_basis.col(j); }
};

ProjectionFrame embed_subspace(const SubspaceBasis& subspace, const EmbeddingMaps& maps);

/// |(B_1^n ∩ H)°| = 2^k * sum over k-subsets of |det(x_j)|. Enumerates all
/// C(n, k) subsets; throws when the count exceeds `cap`.
double polar_zonotope_volume(const ProjectionFrame& frame, int k,
                             long cap = 2000000);

struct SubsetSelection {
  enum class Method { Exact, Greedy };
  std::vector<int> sigma;  // ascending k-subset of {0..n-1}
  double abs_det = 0.0;
  Method method = Method::Exact;
};

SubsetSelection select_max_det_subset(const ProjectionFrame& frame, int k,
                                      SubsetSelection::Method method,
                                      long cap = 2000000);

long count_subsets(int n, int k);
std::vector<int> unrank_subset(long rank, int n, int k);

struct ContainmentStats {
  int samples = 0;
  int violations = 0;      // gauge > 1 + 1e-6
  double max_gauge = 0.0;  // over sampled boundary points of B_E
};

struct BallVolumeOptions {
  long mc_samples = 200000;
  uint64_t seed = 99;
};

/// Volume of B_E = {x in E : N(x) <= 1} in the fixed orthonormal frame of E.
/// Exact (section of the unit-ball polytope) when the norm is polytopal,
/// Monte Carlo otherwise.
VolumeEstimate subspace_ball_volume(const UnconditionalNorm& norm,
                                    const SubspaceBasis& subspace,
                                    const BallVolumeOptions& opts = {});

/// B_E as an exact polytope in frame coordinates (polytopal norms only).
PolytopeV subspace_ball_polytope(const UnconditionalNorm& norm,
                                 const SubspaceBasis& subspace);

/// Gauge-membership body for B_E in frame coordinates (any norm).
GaugeBody subspace_ball_body(const UnconditionalNorm& norm,
                             const SubspaceBasis& subspace);

struct EnclosingCrossPolytope {
  std::vector<Vector> vertices;  // y_1..y_k in ambient coordinates, points of E
  Matrix vertices_in_frame;      // k x k, column j = frame coordinates of y_j
  double absconv_volume = 0.0;   // exact: 2^k |det| / k!
  VolumeEstimate ball_volume;    // |B_E|
  double ratio = 0.0;            // (|absconv| / |B_E|)^(1/k)
  double ratio_conservative = 0.0;  // MC error folded against the bound
  double bound = 0.0;               // (e n / k)^2
  ContainmentStats containment;
  SubsetSelection selection;
};

struct EncloseOptions {
  SubsetSelection::Method method = SubsetSelection::Method::Exact;
  long subset_cap = 2000000;
  int containment_samples = 1000;
  BallVolumeOptions ball;
  uint64_t seed = 2024;
};

EnclosingCrossPolytope build_enclosing_polytope(const UnconditionalNorm& norm,
                                                const SubspaceBasis& subspace,
                                                const EmbeddingMaps& maps,
                                                const ProjectionFrame& frame,
                                                const SubsetSelection& selection,
                                                const EncloseOptions& opts = {});

/// Convenience: certificate -> embedding -> frame -> selection -> polytope.
EnclosingCrossPolytope enclose_subspace(const UnconditionalNorm& norm,
                                        const SubspaceBasis& subspace,
                                        const EncloseOptions& opts = {});

struct Lemma2Report {
  VolumeEstimate pullback_volume;  // |T^{-1}(B_1^n) ∩ E|
  VolumeEstimate ball_volume;      // |B_E|
  double ratio = 0.0;              // (pullback / ball)^(1/k)
  double ratio_conservative = 0.0;
  double bound = 0.0;  // e n / k
  bool pass = false;
};

Lemma2Report check_lemma2(const UnconditionalNorm& norm, const SubspaceBasis& subspace,
                          const EmbeddingMaps& maps, const BallVolumeOptions& opts = {});

struct QuotientCubeReport {
  Matrix cube_map;                  // rows c_j; C = {y : |<c_j, y>| <= 1}
  double cube_volume = 0.0;         // 2^k / |det|
  VolumeEstimate ball_volume;       // |B_E| for the quotient ball Q(B_X)
  double ratio = 0.0;               // (|B_E| / |C|)^(1/k)
  double ratio_conservative = 0.0;
  double bound = 0.0;               // (e n / k)^2
  ContainmentStats containment;     // cube corners against the quotient gauge
};

QuotientCubeReport quotient_cube(const UnconditionalNorm& norm, const Matrix& quotient,
                                 const EncloseOptions& opts = {});

/// Gauge of the quotient ball Q(B_X) at y, i.e. min {N(x) : Qx = y},
/// evaluated through the dual formula sup <c,y>/N*(Q^T c) by sampled search;
/// the result is a lower bound on the gauge.
double quotient_gauge_lower(const UnconditionalNorm& norm, const Matrix& quotient,
                            const Vector& y, int directions = 512);

}  // namespace lozvol
