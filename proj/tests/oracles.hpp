// Test-only oracles, independent of the library paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lozvol/norm.hpp"
#include "lozvol/rng.hpp"

namespace oracles {

using lozvol::Matrix;
using lozvol::UnconditionalNorm;
using lozvol::Vector;

// Closed-form optimum of max sum(log w_i) s.t. N(w) <= budget, derived by
// block decomposition: an lp leaf of size d takes w_i = budget * d^(-1/p) / w_i;
// a sum node splits the budget proportionally to block sizes; a max node
// hands the full budget to every block.
inline void lozanovskii_closed_form_rec(const UnconditionalNorm& norm, double budget,
                                        Vector& out, const std::vector<int>& coords) {
  switch (norm.kind()) {
    case UnconditionalNorm::Kind::Lp: {
      const int d = norm.dim();
      double radial;
      if (norm.p() == lozvol::kInf)
        radial = 1.0;
      else
        radial = std::pow(static_cast<double>(d), -1.0 / norm.p());
      for (int i = 0; i < d; ++i)
        out[coords[i]] = budget * radial / norm.weights()[i];
      return;
    }
    case UnconditionalNorm::Kind::Sum: {
      int total = 0;
      for (const auto& b : norm.blocks()) total += static_cast<int>(b.coords.size());
      for (const auto& b : norm.blocks()) {
        std::vector<int> sub(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub[i] = coords[b.coords[i]];
        const double share =
            budget * static_cast<double>(b.coords.size()) / static_cast<double>(total);
        lozanovskii_closed_form_rec(*b.norm, share, out, sub);
      }
      return;
    }
    case UnconditionalNorm::Kind::Max: {
      for (const auto& b : norm.blocks()) {
        std::vector<int> sub(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub[i] = coords[b.coords[i]];
        lozanovskii_closed_form_rec(*b.norm, budget, out, sub);
      }
      return;
    }
  }
}

inline Vector lozanovskii_closed_form(const UnconditionalNorm& norm) {
  Vector out = Vector::Zero(norm.dim());
  std::vector<int> coords(norm.dim());
  for (int i = 0; i < norm.dim(); ++i) coords[i] = i;
  lozanovskii_closed_form_rec(norm, 1.0, out, coords);
  return out;
}

// 2-D grid search for the weighted-l1 case N(w) = 2 w1 + w2 = 1.
inline Vector weighted_l1_grid_search(double step) {
  double best = -1e300;
  Vector arg(2);
  for (double l1 = step; 2.0 * l1 < 1.0; l1 += step) {
    const double l2 = 1.0 - 2.0 * l1;
    const double obj = std::log(l1) + std::log(l2);
    if (obj > best) {
      best = obj;
      arg << l1, l2;
    }
  }
  return arg;
}

// Exact area of a symmetric convex polygon given by its vertices, via angle
// sort + shoelace (independent of the hull code).
inline double polygon_area(std::vector<Vector> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
    return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
  });
  double area = 0.0;
  const size_t m = pts.size();
  for (size_t i = 0; i < m; ++i) {
    const Vector& a = pts[i];
    const Vector& b = pts[(i + 1) % m];
    area += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * std::abs(area);
}

// Brute-force dual norm: maximize <v, a> over N(a) <= 1 by sampled directions
// with multi-start coordinate ascent.
inline double dual_norm_brute(const UnconditionalNorm& norm, const Vector& v,
                              int samples, uint64_t seed) {
  lozvol::Rng rng(seed);
  const int n = norm.dim();
  auto value = [&](const Vector& a) {
    const double na = norm.eval(a);
    return na > 1e-300 ? std::abs(v.dot(a)) / na : 0.0;
  };
  auto refine = [&](Vector a) {
    const double scale = std::max(a.norm(), 1.0);
    a /= scale;
    double best = value(a);
    double step = 0.5;
    for (int iter = 0; iter < 400; ++iter) {
      bool improved = false;
      auto probe = [&](const Vector& dir) {
        const Vector trial = a + step * dir;
        const double val = value(trial);
        if (val > best) {
          best = val;
          a = trial;
          improved = true;
        }
      };
      for (int i = 0; i < n; ++i) {
        probe(Vector::Unit(n, i));
        probe(-Vector::Unit(n, i));
      }
      for (int r = 0; r < 8; ++r) probe(rng.unit_vector(n));
      if (!improved) step *= 0.5;
      if (step < 1e-13) break;
    }
    return best;
  };
  std::vector<Vector> starts;
  for (int i = 0; i < n; ++i) starts.push_back(Vector::Unit(n, i));
  Vector sv(n);
  for (int i = 0; i < n; ++i) sv[i] = v[i] >= 0 ? 1.0 : -1.0;
  starts.push_back(sv);
  starts.push_back(v);
  // Keep the best sampled directions as additional starts.
  Vector best_sample;
  double best_sample_val = -1.0;
  for (int s = 0; s < samples; ++s) {
    const Vector g = rng.gaussian_vector(n);
    const double val = value(g);
    if (val > best_sample_val) {
      best_sample_val = val;
      best_sample = g;
    }
    if (s % 512 == 0) starts.push_back(g);
  }
  starts.push_back(best_sample);
  double best = 0.0;
  for (const auto& a : starts) best = std::max(best, refine(a));
  return best;
}

// Section polygon of B_1^3 with the plane through 0 orthogonal to u: collect
// intersections of the 12 octahedron edges with the plane, express them in an
// orthonormal frame of the plane, and take the polygon area.
inline double b1_3_section_area(const Vector& u_in) {
  Vector u = u_in / u_in.norm();
  std::vector<Vector> verts;
  for (int i = 0; i < 3; ++i) {
    Vector e = Vector::Zero(3);
    e[i] = 1.0;
    verts.push_back(e);
    verts.push_back(-e);
  }
  std::vector<Vector> pts3;
  for (size_t a = 0; a < verts.size(); ++a) {
    for (size_t b = a + 1; b < verts.size(); ++b) {
      if ((verts[a] + verts[b]).norm() < 1e-14) continue;  // antipodal, not an edge
      const double da = u.dot(verts[a]);
      const double db = u.dot(verts[b]);
      if (std::abs(da) < 1e-15 && std::abs(db) < 1e-15) {
        pts3.push_back(verts[a]);
        pts3.push_back(verts[b]);
      } else if (da * db < 0.0) {
        const double t = da / (da - db);
        pts3.push_back(verts[a] + t * (verts[b] - verts[a]));
      } else if (std::abs(da) < 1e-15) {
        pts3.push_back(verts[a]);
      } else if (std::abs(db) < 1e-15) {
        pts3.push_back(verts[b]);
      }
    }
  }
  if (pts3.size() < 3) return 0.0;
  // Orthonormal frame of the plane.
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(u[i]) < std::abs(u[least])) least = i;
  Vector w1 = Vector::Zero(3);
  w1[least] = 1.0;
  w1 -= u * u[least];
  w1 /= w1.norm();
  Vector w2(3);
  w2 << u[1] * w1[2] - u[2] * w1[1], u[2] * w1[0] - u[0] * w1[2],
      u[0] * w1[1] - u[1] * w1[0];
  std::vector<Vector> flat;
  for (const auto& p : pts3) {
    Vector q(2);
    q << w1.dot(p), w2.dot(p);
    flat.push_back(q);
  }
  return polygon_area(flat);
}

}  // namespace oracles
