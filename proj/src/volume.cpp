#include "lozvol/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lozvol/hull.hpp"
#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double sym_tol(const std::vector<Vector>& vecs) {
  double scale = 1.0;
  for (const auto& v : vecs) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  return 1e-12 * scale;
}

}  // namespace

PolytopeV::PolytopeV(int dim_, std::vector<Vector> vertices_)
    : dim(dim_), vertices(std::move(vertices_)) {
  if (dim < 1) throw InvalidInput("PolytopeV: dim must be >= 1");
  if (vertices.empty()) throw InvalidInput("PolytopeV: no vertices");
  for (const auto& v : vertices)
    if (static_cast<int>(v.size()) != dim)
      throw InvalidInput("PolytopeV: vertex dimension mismatch");
  const double tol = sym_tol(vertices);
  for (const auto& v : vertices) {
    bool mirrored = false;
    for (const auto& w : vertices) {
      if ((v + w).cwiseAbs().maxCoeff() <= tol) {
        mirrored = true;
        break;
      }
    }
    if (!mirrored) throw InvalidInput("PolytopeV: vertex set is not symmetric");
  }
  if (static_cast<int>(vertices.size()) < dim)
    throw InvalidInput("PolytopeV: vertices do not span the space");
  Matrix m(dim, static_cast<int>(vertices.size()));
  for (size_t i = 0; i < vertices.size(); ++i) m.col(static_cast<int>(i)) = vertices[i];
  Eigen::JacobiSVD<Matrix> svd(m);
  if (svd.singularValues()[dim - 1] <= tol)
    throw InvalidInput("PolytopeV: vertices do not span the space");
}

PolytopeH::PolytopeH(int dim_, std::vector<Vector> normals_)
    : dim(dim_), facet_normals(std::move(normals_)) {
  if (dim < 1) throw InvalidInput("PolytopeH: dim must be >= 1");
  if (facet_normals.empty()) throw InvalidInput("PolytopeH: no facets");
  for (const auto& a : facet_normals)
    if (static_cast<int>(a.size()) != dim)
      throw InvalidInput("PolytopeH: normal dimension mismatch");
  const double tol = sym_tol(facet_normals);
  for (const auto& a : facet_normals) {
    bool mirrored = false;
    for (const auto& b : facet_normals)
      if ((a + b).cwiseAbs().maxCoeff() <= tol) mirrored = true;
    if (!mirrored) throw InvalidInput("PolytopeH: facet set is not symmetric");
  }
  // Boundedness probe: every coordinate direction must be supported.
  for (int j = 0; j < dim; ++j) {
    double up = 0.0, dn = 0.0;
    for (const auto& a : facet_normals) {
      up = std::max(up, a[j]);
      dn = std::max(dn, -a[j]);
    }
    if (up <= tol || dn <= tol)
      throw InvalidInput("PolytopeH: unbounded along a coordinate direction");
  }
}

VolumeEstimate volume_vrep(const PolytopeV& body) {
  if (body.dim > 9)
    throw InvalidInput("volume_vrep: exact path supports dim <= 9");
  ConvexHull hull = robust_hull(body.vertices, body.dim);
  if (!hull.full_dimensional())
    throw InvalidInput("volume_vrep: polytope is not full-dimensional");
  VolumeEstimate est;
  est.value = hull.volume();
  est.method = VolumeEstimate::Method::ExactTriangulation;
  est.std_error = 0.0;
  return est;
}

double cross_polytope_image_volume(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("cross_polytope_image_volume: square matrix required");
  const int k = static_cast<int>(a.rows());
  const double det = std::abs(Eigen::PartialPivLU<Matrix>(a).determinant());
  if (!(det > 0.0) || !std::isfinite(det))
    throw InvalidInput("cross_polytope_image_volume: singular matrix");
  return std::pow(2.0, k) / factorial(k) * det;
}

double cube_image_volume(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("cube_image_volume: square matrix required");
  const int k = static_cast<int>(a.rows());
  const double det = std::abs(Eigen::PartialPivLU<Matrix>(a).determinant());
  if (!(det > 0.0) || !std::isfinite(det))
    throw InvalidInput("cube_image_volume: singular matrix");
  return std::pow(2.0, k) * det;
}

PolytopeH polar_polytope(const PolytopeV& body) {
  // Vertices become facet normals: K° = {y : <v, y> <= 1 for all vertices v}.
  // Full dimension of K (a PolytopeV invariant) makes K° bounded.
  return PolytopeH(body.dim, body.vertices);
}

PolytopeH to_hrep(const PolytopeV& body) {
  if (body.dim == 1) {
    double r = 0.0;
    for (const auto& v : body.vertices) r = std::max(r, std::abs(v[0]));
    if (r <= 0.0) throw InvalidInput("to_hrep: origin not interior");
    return PolytopeH(1, {Vector::Constant(1, 1.0 / r), Vector::Constant(1, -1.0 / r)});
  }
  ConvexHull hull = robust_hull(body.vertices, body.dim);
  if (!hull.full_dimensional())
    throw InvalidInput("to_hrep: body is not full-dimensional");
  std::vector<Vector> normals;
  for (const auto& f : hull.merged_facets()) {
    if (f.offset <= hull.tolerance())
      throw InvalidInput("to_hrep: origin not interior");
    normals.push_back(f.normal / f.offset);
  }
  return PolytopeH(body.dim, std::move(normals));
}

std::vector<Vector> hpolytope_vertices(const std::vector<Vector>& normals, int dim) {
  if (dim == 1) {
    double up = kInf, dn = -kInf;
    for (const auto& a : normals) {
      if (a[0] > 0.0) up = std::min(up, 1.0 / a[0]);
      if (a[0] < 0.0) dn = std::max(dn, 1.0 / a[0]);
    }
    if (!std::isfinite(up) || !std::isfinite(dn))
      throw InvalidInput("hpolytope_vertices: unbounded");
    return {Vector::Constant(1, up), Vector::Constant(1, dn)};
  }
  // Vertices of {x : <a_i, x> <= 1} are facets of conv{a_i} scaled by the
  // facet offset (polar correspondence; origin must be interior to the conv).
  ConvexHull hull = robust_hull(normals, dim);
  if (!hull.full_dimensional())
    throw InvalidInput("hpolytope_vertices: unbounded (normals do not span)");
  std::vector<Vector> verts;
  for (const auto& f : hull.merged_facets()) {
    if (f.offset <= hull.tolerance())
      throw InvalidInput("hpolytope_vertices: unbounded (origin not interior to normal hull)");
    verts.push_back(f.normal / f.offset);
  }
  return verts;
}

PolytopeV polar_polytope(const PolytopeH& body) {
  // Facet normals become vertices: {x : <a_i, x> <= 1}° = conv{a_i}.
  if (body.dim == 1) {
    double up = 0.0, dn = 0.0;
    for (const auto& a : body.facet_normals) {
      up = std::max(up, a[0]);
      dn = std::max(dn, -a[0]);
    }
    return PolytopeV(1, {Vector::Constant(1, up), Vector::Constant(1, -dn)});
  }
  ConvexHull hull = robust_hull(body.facet_normals, body.dim);
  if (!hull.full_dimensional())
    throw InvalidInput("polar_polytope: degenerate");
  std::vector<Vector> extremes;
  for (int id : hull.vertex_indices()) extremes.push_back(hull.points()[id]);
  return PolytopeV(body.dim, std::move(extremes));
}

PolytopeV to_vrep(const PolytopeH& body) {
  return PolytopeV(body.dim, hpolytope_vertices(body.facet_normals, body.dim));
}

VolumeEstimate volume_hrep(const PolytopeH& body) {
  return volume_vrep(PolytopeV(body.dim, hpolytope_vertices(body.facet_normals, body.dim)));
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

Vector body_box(const GaugeBody& body) {
  Vector half = Vector::Constant(body.dim, body.box_radius);
  if (body.support) {
    for (int i = 0; i < body.dim; ++i) {
      const double s = body.support(Vector::Unit(body.dim, i));
      if (s > 0.0 && std::isfinite(s)) half[i] = std::min(half[i], s);
    }
  }
  return half;
}

VolumeEstimate rejection_volume(const GaugeBody& body, const Vector& half,
                                long samples, Rng& rng) {
  const int k = body.dim;
  long hits = 0;
  Vector x(k);
  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < k; ++i) x[i] = rng.uniform(-half[i], half[i]);
    if (body.gauge(x) <= 1.0) ++hits;
  }
  double box_vol = 1.0;
  for (int i = 0; i < k; ++i) box_vol *= 2.0 * half[i];
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  VolumeEstimate est;
  est.value = box_vol * p;
  est.std_error = box_vol * std::sqrt(std::max(p * (1.0 - p), 1e-300) /
                                      static_cast<double>(samples));
  est.method = VolumeEstimate::Method::MonteCarlo;
  return est;
}

double euclidean_ball_volume(int k, double r) {
  // pi^(k/2) / Gamma(k/2 + 1) * r^k
  const double log_vol = 0.5 * k * std::log(std::numbers::pi) -
                         std::lgamma(0.5 * k + 1.0) + k * std::log(r);
  return std::exp(log_vol);
}

// One hit-and-run step inside {gauge <= 1} ∩ {|x|_2 <= radius}.
void hit_and_run_step(const GaugeBody& body, double radius, Vector& x, Rng& rng) {
  const Vector dir = rng.unit_vector(body.dim);
  auto inside = [&](double t) {
    const Vector y = x + t * dir;
    return y.norm() <= radius && body.gauge(y) <= 1.0;
  };
  // Bracket the chord endpoints by doubling, then bisect.
  auto endpoint = [&](double sign) {
    double lo = 0.0, hi = sign;
    while (inside(hi) && std::abs(hi) < 1e6) hi *= 2.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (inside(mid))
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  const double tmax = endpoint(1e-9 + radius * 1e-6);
  const double tmin = endpoint(-(1e-9 + radius * 1e-6));
  x += rng.uniform(tmin, tmax) * dir;
}

// Telescoping product over balls: |K| = |B(r0)| * prod |K ∩ B(r_i)| / |K ∩ B(r_{i-1})|.
VolumeEstimate telescoping_volume(const GaugeBody& body, const Vector& half,
                                  long samples, Rng& rng) {
  const int k = body.dim;
  const double r0 = body.inradius;
  const double r_out = half.norm();
  if (!(r0 > 0.0)) throw InvalidInput("gauge_volume_mc: no usable inradius");
  std::vector<double> radii{r0};
  while (radii.back() < r_out) radii.push_back(radii.back() * std::pow(2.0, 1.0 / k));
  const int phases = static_cast<int>(radii.size()) - 1;
  if (phases == 0) {
    VolumeEstimate est;
    est.value = euclidean_ball_volume(k, r0);
    est.method = VolumeEstimate::Method::MonteCarlo;
    return est;
  }
  const long per_phase = std::max<long>(512, samples / phases);
  const int thin = 4 * k;

  double log_vol = std::log(euclidean_ball_volume(k, r0));
  double rel_var = 0.0;
  Vector x = Vector::Zero(k);
  // Walk from the largest body down; samples in K_i count hits in K_{i-1}.
  for (int i = phases; i >= 1; --i) {
    const double r_hi = radii[i], r_lo = radii[i - 1];
    long inside_count = 0;
    for (int b = 0; b < 64; ++b) hit_and_run_step(body, r_hi, x, rng);  // burn-in
    for (long s = 0; s < per_phase; ++s) {
      for (int t = 0; t < thin; ++t) hit_and_run_step(body, r_hi, x, rng);
      if (x.norm() <= r_lo) ++inside_count;
    }
    const double q = std::max(static_cast<double>(inside_count) /
                                  static_cast<double>(per_phase),
                              1e-6);
    log_vol -= std::log(q);
    rel_var += (1.0 - q) / (q * static_cast<double>(per_phase));
    // Keep the walker inside the next (smaller) body.
    while (x.norm() > r_lo) x *= 0.5;
  }
  VolumeEstimate est;
  est.value = std::exp(log_vol);
  est.std_error = est.value * std::sqrt(rel_var);
  est.method = VolumeEstimate::Method::MonteCarlo;
  return est;
}

}  // namespace

VolumeEstimate gauge_volume_mc(const GaugeBody& body, long samples, uint64_t seed) {
  if (samples < 10000) throw InvalidInput("gauge_volume_mc: samples must be >= 10^4");
  Rng rng(seed);
  const Vector half = body_box(body);
  // Pilot run decides between rejection and hit-and-run telescoping.
  const long pilot = 4096;
  long hits = 0;
  Vector x(body.dim);
  for (long s = 0; s < pilot; ++s) {
    for (int i = 0; i < body.dim; ++i) x[i] = rng.uniform(-half[i], half[i]);
    if (body.gauge(x) <= 1.0) ++hits;
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(pilot);
  if (rate < 1e-3 && body.inradius > 0.0)
    return telescoping_volume(body, half, samples, rng);
  return rejection_volume(body, half, samples, rng);
}

namespace {

GaugeBody make_ball_body(const UnconditionalNorm& norm,
                         const std::optional<SubspaceBasis>& subspace) {
  GaugeBody body;
  auto dual = std::make_shared<const UnconditionalNorm>(norm.dual());
  if (subspace) {
    if (subspace->ambient_dim() != norm.dim())
      throw InvalidInput("ball_volume_mc: subspace/norm dimension mismatch");
    const Matrix frame = subspace->frame();
    body.dim = subspace->sub_dim();
    body.gauge = [&norm, frame](const Vector& c) { return norm.eval(frame * c); };
    const double lower = norm.l2_lower_factor();
    if (!(lower > 0.0)) throw InvalidInput("ball_volume_mc: bounding box unobtainable");
    body.box_radius = 1.0 / lower;  // |c|_2 = |Fc|_2 <= 1/m
    body.inradius = 1.0 / norm.l2_upper_factor();
    body.support = [dual, frame](const Vector& d) { return dual->eval(frame * d); };
  } else {
    const int n = norm.dim();
    body.dim = n;
    body.gauge = [&norm](const Vector& v) { return norm.eval(v); };
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ni = norm.eval(Vector::Unit(n, i));
      if (!(ni > 0.0)) throw InvalidInput("ball_volume_mc: bounding box unobtainable");
      r = std::max(r, 1.0 / ni);  // |x_i| N(e_i) <= N(x) by unconditionality
    }
    body.box_radius = r;
    body.inradius = 1.0 / norm.l2_upper_factor();
    body.support = [dual](const Vector& d) { return dual->eval(d); };
  }
  return body;
}

}  // namespace

VolumeEstimate ball_volume_mc(const UnconditionalNorm& norm,
                              const std::optional<SubspaceBasis>& subspace,
                              long samples, uint64_t seed) {
  return gauge_volume_mc(make_ball_body(norm, subspace), samples, seed);
}

// ---------------------------------------------------------------------------
// Central sections

namespace {

// Orthonormal basis of the hyperplane orthogonal to u (deterministic).
Matrix hyperplane_frame(const Vector& u) {
  const int k = static_cast<int>(u.size());
  Eigen::FullPivHouseholderQR<Matrix> qr(u);
  Matrix q = qr.matrixQ();
  Matrix w(k, k - 1);
  // First column of Q is ±u/|u|; the rest span the complement.
  for (int j = 1; j < k; ++j) w.col(j - 1) = q.col(j);
  return w;
}

// Volume of {z in R^(k-1) : <b_i, z> <= c_i} with all c_i > 0.
double hslice_volume(std::vector<Vector> normals, std::vector<double> offsets, int dim) {
  std::vector<Vector> unit;
  double scale = 0.0;
  for (size_t i = 0; i < normals.size(); ++i) scale = std::max(scale, normals[i].norm());
  for (size_t i = 0; i < normals.size(); ++i) {
    if (normals[i].norm() <= 1e-13 * std::max(scale, 1.0)) continue;  // face parallel to slice
    unit.push_back(normals[i] / offsets[i]);
  }
  if (unit.empty()) throw InvalidInput("section: unbounded slice");
  if (dim == 1) {
    double up = kInf, dn = -kInf;
    for (const auto& a : unit) {
      if (a[0] > 0.0) up = std::min(up, 1.0 / a[0]);
      if (a[0] < 0.0) dn = std::max(dn, 1.0 / a[0]);
    }
    if (!std::isfinite(up) || !std::isfinite(dn))
      throw InvalidInput("section: unbounded slice");
    return std::max(0.0, up - dn);
  }
  const auto verts = hpolytope_vertices(unit, dim);
  ConvexHull hull = robust_hull(verts, dim);
  if (!hull.full_dimensional()) return 0.0;
  return hull.volume();
}

}  // namespace

namespace {

SectionValue section_from_hrep(const PolytopeH& h, const Vector& direction,
                               double offset) {
  SectionValue out;
  Vector u = direction;
  const double un = u.norm();
  if (!(un > 0.0)) throw InvalidInput("section: zero direction");
  u /= un;
  const Matrix w = hyperplane_frame(u);
  std::vector<Vector> normals;
  std::vector<double> offsets;
  normals.reserve(h.facet_normals.size());
  for (const auto& a : h.facet_normals) {
    const double c = 1.0 - offset * a.dot(u);
    if (c <= 0.0) {  // slice center outside this halfspace: empty section
      out.value = 0.0;
      return out;
    }
    normals.push_back(w.transpose() * a);
    offsets.push_back(c);
  }
  out.value = hslice_volume(std::move(normals), std::move(offsets), h.dim - 1);
  return out;
}

}  // namespace

SectionValue central_section_volume(const PolytopeV& body, const Vector& direction) {
  SectionValue out;
  if (body.dim == 1) {
    out.degenerate = true;
    out.value = 0.0;
    return out;
  }
  return section_from_hrep(to_hrep(body), direction, 0.0);
}

SectionValue parallel_section_volume(const PolytopeV& body, const Vector& direction,
                                     double offset) {
  SectionValue out;
  if (body.dim == 1) {
    out.degenerate = true;
    return out;
  }
  return section_from_hrep(to_hrep(body), direction, offset);
}

SectionValue central_section_volume_mc(const GaugeBody& body, const Vector& direction,
                                       long samples, uint64_t seed) {
  SectionValue out;
  if (body.dim == 1) {
    out.degenerate = true;
    return out;
  }
  Vector u = direction;
  u /= u.norm();
  const Matrix w = hyperplane_frame(u);
  Rng rng(seed);
  const int k = body.dim - 1;
  Vector half = Vector::Constant(k, body.box_radius);
  if (body.support) {
    for (int i = 0; i < k; ++i) {
      const double s = body.support(w.col(i));
      if (s > 0.0 && std::isfinite(s)) half[i] = std::min(half[i], s);
    }
  }
  long hits = 0;
  Vector z(k);
  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < k; ++i) z[i] = rng.uniform(-half[i], half[i]);
    if (body.gauge(w * z) <= 1.0) ++hits;
  }
  double box = 1.0;
  for (int i = 0; i < k; ++i) box *= 2.0 * half[i];
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  out.value = box * p;
  out.std_error =
      box * std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(samples));
  return out;
}

namespace {

template <typename Eval>
MaxSection max_section_search(int dim, int budget, uint64_t seed, Eval&& eval) {
  MaxSection best;
  best.value = -1.0;
  auto consider = [&](const Vector& u) {
    const auto sv = eval(u);
    if (sv.value > best.value) {
      best.value = sv.value;
      best.std_error = sv.std_error;
      best.direction = u;
    }
  };
  for (int i = 0; i < dim; ++i) consider(Vector::Unit(dim, i));
  Rng rng(seed);
  for (int i = 0; i < budget; ++i) consider(rng.unit_vector(dim));
  // Coordinate ascent on the sphere with step halving.
  double step = 0.5;
  for (int iter = 0; iter < 50; ++iter) {
    bool improved = false;
    for (int i = 0; i < dim; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vector u = best.direction + sgn * step * Vector::Unit(dim, i);
        const double n = u.norm();
        if (n <= 1e-12) continue;
        u /= n;
        const auto sv = eval(u);
        if (sv.value > best.value) {
          best.value = sv.value;
          best.std_error = sv.std_error;
          best.direction = u;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

MaxSection max_central_section(const PolytopeV& body, int budget, uint64_t seed) {
  if (body.dim == 1) {
    MaxSection out;
    out.degenerate = true;
    out.direction = Vector::Unit(1, 0);
    return out;
  }
  const PolytopeH h = to_hrep(body);
  return max_section_search(body.dim, budget, seed, [&](const Vector& u) {
    return section_from_hrep(h, u, 0.0);
  });
}

MaxSection max_central_section_mc(const GaugeBody& body, int budget, long samples,
                                  uint64_t seed) {
  if (body.dim == 1) {
    MaxSection out;
    out.degenerate = true;
    out.direction = Vector::Unit(1, 0);
    return out;
  }
  // Search on cheap estimates, then re-estimate the chosen direction on
  // fresh samples so the reported value carries no selection bias.
  uint64_t stream = seed;
  const long search_samples = std::max<long>(samples / 8, 4000);
  MaxSection best =
      max_section_search(body.dim, budget, seed ^ 0x5bf0f3ull, [&](const Vector& u) {
        return central_section_volume_mc(body, u, search_samples, ++stream);
      });
  const auto final_est =
      central_section_volume_mc(body, best.direction, samples, seed ^ 0xFEEDull);
  best.value = final_est.value;
  best.std_error = final_est.std_error;
  return best;
}

}  // namespace lozvol
