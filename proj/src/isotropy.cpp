#include "lozvol/isotropy.hpp"

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

}  // namespace

Matrix covariance_polytope(const PolytopeV& body) {
  const int k = body.dim;
  if (k == 1) {
    double r = 0.0;
    for (const auto& v : body.vertices) r = std::max(r, std::abs(v[0]));
    Matrix c(1, 1);
    c(0, 0) = 2.0 * r * r * r / 3.0;  // integral of x^2 over [-r, r]
    return c;
  }
  ConvexHull hull = robust_hull(body.vertices, k);
  if (!hull.full_dimensional())
    throw InvalidInput("covariance_polytope: body is not full-dimensional");
  // Σ over boundary simplices S = conv(0, v_1..v_k):
  //   ∫_S x x^T = vol(S)/((k+1)(k+2)) (Σ v_i v_i^T + (Σ v_i)(Σ v_i)^T).
  // Fan from the origin, which is interior by symmetry.
  const double kfact = factorial(k);
  Matrix cov = Matrix::Zero(k, k);
  Matrix simplex(k, k);
  for (const auto& f : hull.facets()) {
    for (int i = 0; i < k; ++i) simplex.col(i) = hull.points()[f.vertices[i]];
    const double vol = std::abs(simplex.determinant()) / kfact;
    Matrix sum_outer = Matrix::Zero(k, k);
    Vector vsum = Vector::Zero(k);
    for (int i = 0; i < k; ++i) {
      sum_outer += simplex.col(i) * simplex.col(i).transpose();
      vsum += simplex.col(i);
    }
    cov += vol / ((k + 1.0) * (k + 2.0)) * (sum_outer + vsum * vsum.transpose());
  }
  return cov;
}

namespace {

McMoments moments_by_rejection(const std::function<bool(const Vector&)>& member,
                               int k, double half, long samples, uint64_t seed) {
  Rng rng(seed);
  const double box = std::pow(2.0 * half, k);
  Matrix sum = Matrix::Zero(k, k), sum_sq = Matrix::Zero(k, k);
  long hits = 0;
  Vector x(k);
  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < k; ++i) x[i] = rng.uniform(-half, half);
    if (!member(x)) continue;
    ++hits;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const double v = x[i] * x[j];
        sum(i, j) += v;
        sum_sq(i, j) += v * v;
      }
    }
  }
  McMoments out;
  const double ns = static_cast<double>(samples);
  out.second_moment = box * sum / ns;
  out.std_error.resize(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double mean = sum(i, j) / ns;
      const double var = std::max(sum_sq(i, j) / ns - mean * mean, 0.0);
      out.std_error(i, j) = box * std::sqrt(var / ns);
    }
  }
  const double p = static_cast<double>(hits) / ns;
  out.volume = box * p;
  out.volume_std_error = box * std::sqrt(std::max(p * (1.0 - p), 1e-300) / ns);
  return out;
}

}  // namespace

McMoments covariance_mc(const PolytopeV& body, long samples, uint64_t seed) {
  const PolytopeH h = to_hrep(body);
  double half = 0.0;
  for (const auto& v : body.vertices) half = std::max(half, v.cwiseAbs().maxCoeff());
  auto member = [&h](const Vector& x) {
    for (const auto& a : h.facet_normals)
      if (a.dot(x) > 1.0) return false;
    return true;
  };
  return moments_by_rejection(member, body.dim, half, samples, seed);
}

McMoments covariance_mc(const GaugeBody& body, long samples, uint64_t seed) {
  auto member = [&body](const Vector& x) { return body.gauge(x) <= 1.0; };
  return moments_by_rejection(member, body.dim, body.box_radius, samples, seed);
}

IsotropicBody to_isotropic(const PolytopeV& body) {
  const int k = body.dim;
  const Matrix cov = covariance_polytope(body);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("to_isotropic: covariance not positive definite");
  const Matrix whiten = eig.eigenvectors() *
                        eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
  const double vol0 = volume_vrep(body).value;
  const double det_w = eig.eigenvalues().cwiseSqrt().cwiseInverse().prod();
  const double scale = std::pow(vol0 * det_w, -1.0 / k);
  const Matrix a = scale * whiten;

  std::vector<Vector> verts;
  verts.reserve(body.vertices.size());
  for (const auto& v : body.vertices) verts.push_back(a * v);
  IsotropicBody out{PolytopeV(k, std::move(verts)), {}};

  const Matrix cov1 = covariance_polytope(out.body);
  const double vol1 = volume_vrep(out.body).value;
  const double l = std::sqrt(cov1.trace() / k);
  out.report.map = a;
  out.report.inverse_map = a.inverse();
  out.report.l_constant = l;
  out.report.volume_check = std::abs(vol1 - 1.0);
  out.report.cov_residual =
      (cov1 - l * l * Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  return out;
}

IsotropyReport to_isotropic_mc(const GaugeBody& body, long samples, uint64_t seed) {
  const int k = body.dim;
  const McMoments m0 = covariance_mc(body, samples, seed);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m0.second_moment);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("to_isotropic_mc: covariance estimate not positive definite");
  const Matrix whiten = eig.eigenvectors() *
                        eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
  const double det_w = eig.eigenvalues().cwiseSqrt().cwiseInverse().prod();
  const double scale = std::pow(m0.volume * det_w, -1.0 / k);
  const Matrix a = scale * whiten;
  const Matrix a_inv = a.inverse();

  GaugeBody mapped;
  mapped.dim = k;
  mapped.gauge = [g = body.gauge, a_inv](const Vector& y) { return g(a_inv * y); };
  mapped.box_radius = body.box_radius * scale * eig.eigenvalues().cwiseSqrt().cwiseInverse().maxCoeff() * std::sqrt(static_cast<double>(k));
  mapped.inradius = body.inradius * scale * eig.eigenvalues().cwiseSqrt().cwiseInverse().minCoeff();
  const McMoments m1 = covariance_mc(mapped, samples, seed ^ 0xA5A5);

  IsotropyReport report;
  report.monte_carlo = true;
  report.map = a;
  report.inverse_map = a_inv;
  const double l = std::sqrt(m1.second_moment.trace() / k);
  report.l_constant = l;
  report.volume_check = std::abs(m1.volume - 1.0);
  report.cov_residual =
      (m1.second_moment - l * l * Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  return report;
}

Pi1Estimate pi1_lower_bound(const PolytopeV& isotropic_body, uint64_t seed,
                            const std::vector<int>& family_sizes) {
  const int k = isotropic_body.dim;
  // Hull vertices so the sup over K is an exact vertex maximum.
  ConvexHull hull = robust_hull(isotropic_body.vertices, k);
  std::vector<Vector> extremes;
  for (int id : hull.vertex_indices()) extremes.push_back(hull.points()[id]);

  auto family_ratio = [&](const std::vector<Vector>& family) {
    double num = 0.0;
    for (const auto& a : family) num += a.norm();
    double den = 0.0;
    for (const auto& v : extremes) {
      double s = 0.0;
      for (const auto& a : family) s += std::abs(v.dot(a));
      den = std::max(den, s);
    }
    return den > 0.0 ? num / den : 0.0;
  };

  Pi1Estimate best;
  auto consider = [&](std::vector<Vector> family) {
    const double r = family_ratio(family);
    if (r > best.lower_bound) {
      best.lower_bound = r;
      best.family_size = static_cast<int>(family.size());
      best.witness_family = std::move(family);
    }
  };

  std::vector<Vector> basis;
  for (int i = 0; i < k; ++i) basis.push_back(Vector::Unit(k, i));
  consider(basis);

  std::vector<int> sizes = family_sizes;
  if (sizes.empty()) sizes = {k, 4 * k, 16 * k};
  for (int m : sizes) {
    Rng rng(seed ^ (0x9e3779b9ull * static_cast<uint64_t>(m)));
    std::vector<Vector> family;
    family.reserve(m);
    for (int j = 0; j < m; ++j) family.push_back(rng.gaussian_vector(k));
    consider(std::move(family));
  }
  return best;
}

BoundCheckReport check_theorem3(const UnconditionalNorm& norm,
                                const SubspaceBasis& subspace,
                                const CheckOptions& opts) {
  const int n = subspace.ambient_dim();
  const int k = subspace.sub_dim();
  BoundCheckReport report;
  report.name = "theorem3";
  report.constant_used = 2.0 * std::numbers::e *
                         std::sqrt(6.0 + 3.0 * std::log(static_cast<double>(n) / k));
  if (k == 1) {
    report.skipped = true;  // hyperplane sections of segments are points
    return report;
  }
  if (norm.is_polytopal()) {
    const PolytopeV ball = subspace_ball_polytope(norm, subspace);
    const double vol = volume_vrep(ball).value;
    const MaxSection sec = max_central_section(ball, opts.section_budget, opts.seed);
    report.max_section = sec.value;
    report.lhs = std::pow(vol, (k - 1.0) / k);
    report.rhs = report.constant_used * sec.value;
  } else {
    const GaugeBody body = subspace_ball_body(norm, subspace);
    const VolumeEstimate vol =
        gauge_volume_mc(body, opts.mc_samples, opts.seed ^ 0x7777);
    const MaxSection sec = max_central_section_mc(body, opts.section_budget,
                                                  std::max<long>(opts.mc_samples / 4, 10000),
                                                  opts.seed ^ 0x8888);
    report.max_section = sec.value;
    // Fold Monte Carlo error on the side unfavorable to passing.
    report.lhs = std::pow(vol.upper3(), (k - 1.0) / k);
    report.rhs = report.constant_used * std::max(sec.value - 3.0 * sec.std_error, 0.0);
  }
  report.margin = report.lhs > 0.0 ? report.rhs / report.lhs : kInf;
  report.pass = report.margin >= 1.0 - 1e-9;
  return report;
}

BoundCheckReport check_theorem4(const UnconditionalNorm& norm, const Matrix& quotient,
                                double constant, const CheckOptions& opts) {
  const int n = norm.dim();
  const int k = static_cast<int>(quotient.rows());
  if (static_cast<int>(quotient.cols()) != n)
    throw InvalidInput("check_theorem4: quotient must be k x n");
  {
    Eigen::JacobiSVD<Matrix> svd(quotient);
    if (svd.singularValues()[k - 1] <= 1e-10 * std::max(1.0, svd.singularValues()[0]))
      throw InvalidInput("quotient not surjective");
  }
  BoundCheckReport report;
  report.name = "theorem4";
  report.constant_used =
      constant > 0.0 ? constant : 2.0 * std::numbers::e * std::sqrt(6.0);
  const double log_factor = 1.0 + std::log(static_cast<double>(n));
  if (k == 1) {
    report.skipped = true;
    return report;
  }

  double vol_hi = 0.0, vol = 0.0, sec_lo = 0.0, sec = 0.0;
  if (norm.is_polytopal()) {
    std::vector<Vector> image;
    for (const auto& v : norm.unit_ball_vertices()) image.push_back(quotient * v);
    ConvexHull hull = robust_hull(image, k);
    // Degenerate images can lose one of a mirror pair to hull tolerances;
    // the quotient ball is symmetric, so restore the mirrors explicitly.
    std::vector<Vector> verts;
    for (int id : hull.vertex_indices()) {
      verts.push_back(hull.points()[id]);
      verts.push_back(-hull.points()[id]);
    }
    const PolytopeV ball(k, verts);
    vol = vol_hi = volume_vrep(ball).value;
    const MaxSection ms = max_central_section(ball, opts.section_budget, opts.seed);
    sec = sec_lo = ms.value;
  } else {
    GaugeBody body;
    body.dim = k;
    body.gauge = [&norm, quotient](const Vector& y) {
      return quotient_gauge_lower(norm, quotient, y, 24);
    };
    Eigen::JacobiSVD<Matrix> svd(quotient);
    body.box_radius = svd.singularValues()[0] / norm.l2_lower_factor();
    body.inradius = svd.singularValues()[k - 1] / norm.l2_upper_factor();
    auto dual = std::make_shared<const UnconditionalNorm>(norm.dual());
    body.support = [dual, quotient](const Vector& c) {
      return dual->eval(quotient.transpose() * c);
    };
    const VolumeEstimate v = gauge_volume_mc(body, opts.mc_samples, opts.seed ^ 0x4444);
    vol = v.value;
    vol_hi = v.upper3();
    const MaxSection ms = max_central_section_mc(body, opts.section_budget,
                                                 std::max<long>(opts.mc_samples / 4, 10000),
                                                 opts.seed ^ 0x2222);
    sec = ms.value;
    sec_lo = std::max(ms.value - 3.0 * ms.std_error, 0.0);
  }
  report.max_section = sec;
  report.lhs = std::pow(vol_hi, (k - 1.0) / k);
  report.rhs = report.constant_used * log_factor * sec_lo;
  report.margin = report.lhs > 0.0 ? report.rhs / report.lhs : kInf;
  report.pass = report.margin >= 1.0 - 1e-9;
  report.min_constant =
      sec_lo > 0.0 ? std::pow(vol, (k - 1.0) / k) / (log_factor * sec) : kInf;
  return report;
}

BoundCheckReport check_lemma3(const PolytopeV& body, uint64_t seed) {
  BoundCheckReport report;
  report.name = "lemma3";
  report.constant_used = 2.0 * std::sqrt(2.0);
  const IsotropicBody iso = to_isotropic(body);
  const Pi1Estimate pi1 = pi1_lower_bound(iso.body, seed);
  report.l_constant = iso.report.l_constant;
  report.lhs = iso.report.l_constant * pi1.lower_bound;
  report.rhs = report.constant_used;
  report.margin = report.lhs > 0.0 ? report.rhs / report.lhs : kInf;
  report.pass = report.lhs <= report.rhs * (1.0 + 1e-6);
  return report;
}

BoundCheckReport hensley_band(const PolytopeV& isotropic_body, double l_constant,
                              const CheckOptions& opts) {
  BoundCheckReport report;
  report.name = "hensley_band";
  if (isotropic_body.dim == 1) {
    report.skipped = true;
    return report;
  }
  const MaxSection sec =
      max_central_section(isotropic_body, opts.section_budget, opts.seed);
  report.max_section = sec.value;
  report.l_constant = l_constant;
  report.lhs = sec.value * l_constant;
  report.rhs = 2.0;
  report.margin = report.lhs;
  report.pass = report.lhs >= 0.2 && report.lhs <= 2.0;
  return report;
}

}  // namespace lozvol
