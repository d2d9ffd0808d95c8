#pragma once

#include <vector>

#include "lozvol/common.hpp"

namespace lozvol {

struct HullFacet {
  Vector normal;               // outward unit normal
  double offset = 0.0;         // facet plane is <normal, x> = offset
  std::vector<int> vertices;   // d point indices (simplicial)
  std::vector<int> neighbors;  // facet id across the ridge omitting vertices[i]
};

struct MergedFacet {
  Vector normal;
  double offset = 0.0;
  std::vector<int> vertices;  // all hull points lying on the facet plane
};

/// Incremental convex hull in R^d (quickhull with conflict lists). Facets are
/// kept simplicial; coplanar simplices are merged on demand into true facets.
/// Points within rel_tol * scale of a facet plane are treated as on it.
class ConvexHull {
 public:
  ConvexHull(std::vector<Vector> points, int dim, double rel_tol = 1e-12);

  int dim() const { return d_; }
  bool full_dimensional() const { return full_dim_; }
  const std::vector<Vector>& points() const { return pts_; }
  const std::vector<HullFacet>& facets() const;
  /// Indices of input points that are hull vertices, ascending.
  std::vector<int> vertex_indices() const;
  std::vector<MergedFacet> merged_facets() const;
  /// Exact volume by fanning the simplicial facets from an interior point.
  double volume() const;
  const Vector& interior_point() const { return interior_; }
  double tolerance() const { return tol_; }
  /// Largest distance of any input point above any facet (consistency probe).
  double max_violation() const;

 private:
  void build();
  bool hyperplane(const std::vector<int>& ids, Vector& normal, double& offset) const;

  std::vector<Vector> pts_;
  int d_ = 0;
  double tol_ = 0.0;
  double scale_ = 1.0;
  bool full_dim_ = false;
  Vector interior_;
  std::vector<HullFacet> facets_;
  std::vector<char> alive_;
  std::vector<int> live_ids_;
};

/// Hull with a joggle fallback: on numerical failure the points are
/// perturbed by ~1e-12 * scale and the build is retried.
ConvexHull robust_hull(const std::vector<Vector>& points, int dim);

}  // namespace lozvol
