#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "lozvol/common.hpp"
#include "lozvol/norm.hpp"

namespace lozvol {

/// Symmetric polytope in V-representation (vertex set closed under negation).
struct PolytopeV {
  int dim = 0;
  std::vector<Vector> vertices;

  PolytopeV(int dim_, std::vector<Vector> vertices_);
};

/// Symmetric polytope in H-representation: facets <a, x> <= 1.
struct PolytopeH {
  int dim = 0;
  std::vector<Vector> facet_normals;

  PolytopeH(int dim_, std::vector<Vector> normals_);
};

struct VolumeEstimate {
  enum class Method { ExactTriangulation, DeterminantFormula, MonteCarlo };
  double value = 0.0;
  Method method = Method::ExactTriangulation;
  double std_error = 0.0;

  double lower3() const { return value - 3.0 * std_error; }
  double upper3() const { return value + 3.0 * std_error; }
};

/// Exact volume by convex hull + fan triangulation. Exact path requires
/// dim <= 9.
VolumeEstimate volume_vrep(const PolytopeV& body);

/// Volume of the linear image A(B_1^k): (2^k / k!) |det A|.
double cross_polytope_image_volume(const Matrix& a);
/// Volume of the linear image A(B_inf^k): 2^k |det A|.
double cube_image_volume(const Matrix& a);

PolytopeH polar_polytope(const PolytopeV& body);
/// The same body in H-representation (facets of the hull of the vertices).
PolytopeH to_hrep(const PolytopeV& body);
PolytopeV polar_polytope(const PolytopeH& body);

/// Vertices of {x : <a,x> <= 1 for all rows a}; throws when unbounded.
std::vector<Vector> hpolytope_vertices(const std::vector<Vector>& normals, int dim);
/// The same body in V-representation.
PolytopeV to_vrep(const PolytopeH& body);
VolumeEstimate volume_hrep(const PolytopeH& body);

/// Monte Carlo volume of {x in E : N(x) <= 1} in the fixed orthonormal frame
/// of E (ambient ball when subspace is absent). Rejection from a coordinate
/// box; switches to hit-and-run telescoping when the pilot acceptance rate is
/// below 1e-3.
VolumeEstimate ball_volume_mc(const UnconditionalNorm& norm,
                              const std::optional<SubspaceBasis>& subspace,
                              long samples, uint64_t seed);

/// Gauge-membership body for Monte Carlo paths.
struct GaugeBody {
  int dim = 0;
  std::function<double(const Vector&)> gauge;  // positively homogeneous
  double box_radius = 0.0;                     // {gauge <= 1} lies in [-r, r]^dim
  double inradius = 0.0;                       // euclidean ball of this radius fits inside
  /// Optional upper bound on the support function sup{<d, x> : gauge(x) <= 1};
  /// tightens the rejection boxes when available.
  std::function<double(const Vector&)> support;
};

VolumeEstimate gauge_volume_mc(const GaugeBody& body, long samples, uint64_t seed);

struct SectionValue {
  double value = 0.0;       // (k-1)-volume of body ∩ u-perp
  double std_error = 0.0;   // 0 for the exact path
  bool degenerate = false;  // k = 1: sections are points
};

SectionValue central_section_volume(const PolytopeV& body, const Vector& direction);
/// Parallel section at signed offset t along u (exact path); used by the
/// Brunn sanity checks.
SectionValue parallel_section_volume(const PolytopeV& body, const Vector& direction,
                                     double offset);
SectionValue central_section_volume_mc(const GaugeBody& body, const Vector& direction,
                                       long samples, uint64_t seed);

struct MaxSection {
  Vector direction;
  double value = 0.0;
  double std_error = 0.0;
  bool degenerate = false;
};

/// Heuristic search over coordinate directions, `budget` random directions,
/// and coordinate ascent on the sphere (step halving, 50 iterations). The
/// result is a lower bound on the supremum.
MaxSection max_central_section(const PolytopeV& body, int budget, uint64_t seed);
MaxSection max_central_section_mc(const GaugeBody& body, int budget, long samples,
                                  uint64_t seed);

}  // namespace lozvol
