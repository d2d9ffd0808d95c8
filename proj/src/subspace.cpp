#include "lozvol/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lozvol/hull.hpp"
#include "lozvol/parallel.hpp"
#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

ProjectionFrame embed_subspace(const SubspaceBasis& subspace, const EmbeddingMaps& maps) {
  const int n = subspace.ambient_dim();
  const int k = subspace.sub_dim();
  if (static_cast<int>(maps.t_diag.size()) != n)
    throw InvalidInput("embed_subspace: embedding dimension mismatch");
  Matrix mapped = maps.t_diag.asDiagonal() * subspace.basis();  // n x k
  Eigen::JacobiSVD<Matrix> svd(mapped, Eigen::ComputeThinU);
  if (svd.singularValues()[k - 1] <= 1e-12 * svd.singularValues()[0])
    throw InvalidInput("embed_subspace: mapped basis is rank-deficient");
  ProjectionFrame frame;
  frame.h_basis = svd.matrixU().transpose();  // k x n, orthonormal rows
  return frame;
}

long count_subsets(int n, int k) {
  if (k < 0 || k > n) return 0;
  long double c = 1.0L;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  const long double cap = 4e18L;
  return static_cast<long>(std::min(cap, c + 0.5L));
}

std::vector<int> unrank_subset(long rank, int n, int k) {
  std::vector<int> combo;
  combo.reserve(k);
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int x = next;; ++x) {
      const long below = count_subsets(n - 1 - x, k - 1 - slot);
      if (rank < below) {
        combo.push_back(x);
        next = x + 1;
        break;
      }
      rank -= below;
    }
  }
  return combo;
}

namespace {

bool next_subset(std::vector<int>& combo, int n) {
  const int k = static_cast<int>(combo.size());
  for (int i = k - 1; i >= 0; --i) {
    if (combo[i] < n - k + i) {
      ++combo[i];
      for (int j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
      return true;
    }
  }
  return false;
}

struct SubsetScan {
  double det_sum = 0.0;
  double best_det = -1.0;
  std::vector<int> best_subset;
};

// Chunked parallel scan over all k-subsets; chunk boundaries are fixed so
// the reduction order (and hence the floating-point sum) is deterministic
// regardless of thread count.
SubsetScan scan_subsets(const ProjectionFrame& frame, int k, long cap) {
  const int n = frame.ambient_dim();
  const long total = count_subsets(n, k);
  if (total > cap)
    throw InvalidInput("subset enumeration exceeds cap; use the greedy path");
  const long chunk = 8192;
  const int chunks = static_cast<int>((total + chunk - 1) / chunk);
  std::vector<SubsetScan> partial(chunks);
  parallel_for(chunks, [&](int ci) {
    const long lo = ci * chunk;
    const long hi = std::min(total, lo + chunk);
    std::vector<int> combo = unrank_subset(lo, n, k);
    Matrix sub(k, k);
    SubsetScan acc;
    for (long r = lo; r < hi; ++r) {
      for (int j = 0; j < k; ++j) sub.col(j) = frame.h_basis.col(combo[j]);
      const double det = std::abs(Eigen::PartialPivLU<Matrix>(sub).determinant());
      acc.det_sum += det;
      // Ties (within rounding) keep the lexicographically first subset.
      if (det > acc.best_det * (1.0 + 1e-12)) {
        acc.best_det = det;
        acc.best_subset = combo;
      }
      if (r + 1 < hi) next_subset(combo, n);
    }
    partial[ci] = std::move(acc);
  });
  SubsetScan out;
  for (const auto& acc : partial) {
    out.det_sum += acc.det_sum;
    // Chunks are combined in enumeration order; ties keep the earlier one.
    if (acc.best_det > out.best_det * (1.0 + 1e-12)) {
      out.best_det = acc.best_det;
      out.best_subset = acc.best_subset;
    }
  }
  return out;
}

}  // namespace

double polar_zonotope_volume(const ProjectionFrame& frame, int k, long cap) {
  if (k != frame.sub_dim()) throw InvalidInput("polar_zonotope_volume: k mismatch");
  const auto scan = scan_subsets(frame, k, cap);
  return std::pow(2.0, k) * scan.det_sum;
}

SubsetSelection select_max_det_subset(const ProjectionFrame& frame, int k,
                                      SubsetSelection::Method method, long cap) {
  if (k != frame.sub_dim()) throw InvalidInput("select_max_det_subset: k mismatch");
  const int n = frame.ambient_dim();
  SubsetSelection sel;
  sel.method = method;
  if (method == SubsetSelection::Method::Exact) {
    const auto scan = scan_subsets(frame, k, cap);
    if (scan.best_det <= 0.0)
      throw NumericalError("select_max_det_subset: all subsets singular");
    sel.sigma = scan.best_subset;
    sel.abs_det = scan.best_det;
    return sel;
  }
  // Greedy pivoted orthogonalization: repeatedly take the column with the
  // largest residual norm, ties to the lowest index.
  Matrix residual = frame.h_basis;
  std::vector<char> used(n, 0);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_norm = 0.0;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double r = residual.col(j).norm();
      if (r > best_norm * (1.0 + 1e-14)) {
        best_norm = r;
        best = j;
      }
    }
    if (best < 0 || best_norm <= 1e-13)
      throw NumericalError("select_max_det_subset: greedy pivot collapsed");
    used[best] = 1;
    sel.sigma.push_back(best);
    const Vector q = residual.col(best) / best_norm;
    residual -= q * (q.transpose() * residual);
  }
  std::sort(sel.sigma.begin(), sel.sigma.end());
  Matrix sub(k, k);
  for (int j = 0; j < k; ++j) sub.col(j) = frame.h_basis.col(sel.sigma[j]);
  sel.abs_det = std::abs(Eigen::PartialPivLU<Matrix>(sub).determinant());
  if (sel.abs_det <= 0.0)
    throw NumericalError("select_max_det_subset: greedy subset singular");
  return sel;
}

// ---------------------------------------------------------------------------
// B_E volumes

PolytopeV subspace_ball_polytope(const UnconditionalNorm& norm,
                                 const SubspaceBasis& subspace) {
  if (!norm.is_polytopal())
    throw InvalidInput("subspace_ball_polytope: norm is not polytopal");
  const Matrix frame = subspace.frame();
  const int k = subspace.sub_dim();
  std::vector<Vector> normals;
  double scale = 0.0;
  for (const auto& d : norm.unit_ball_facet_normals()) {
    Vector a = frame.transpose() * d;
    scale = std::max(scale, a.cwiseAbs().maxCoeff());
    normals.push_back(std::move(a));
  }
  std::vector<Vector> kept;
  for (auto& a : normals)
    if (a.norm() > 1e-13 * std::max(1.0, scale)) kept.push_back(std::move(a));
  return PolytopeV(k, hpolytope_vertices(kept, k));
}

GaugeBody subspace_ball_body(const UnconditionalNorm& norm,
                             const SubspaceBasis& subspace) {
  GaugeBody body;
  const Matrix frame = subspace.frame();
  body.dim = subspace.sub_dim();
  body.gauge = [&norm, frame](const Vector& c) { return norm.eval(frame * c); };
  const double lower = norm.l2_lower_factor();
  if (!(lower > 0.0)) throw InvalidInput("subspace_ball_body: no bounding box");
  body.box_radius = 1.0 / lower;
  body.inradius = 1.0 / norm.l2_upper_factor();
  auto dual = std::make_shared<const UnconditionalNorm>(norm.dual());
  body.support = [dual, frame](const Vector& d) { return dual->eval(frame * d); };
  return body;
}

VolumeEstimate subspace_ball_volume(const UnconditionalNorm& norm,
                                    const SubspaceBasis& subspace,
                                    const BallVolumeOptions& opts) {
  if (norm.is_polytopal()) return volume_vrep(subspace_ball_polytope(norm, subspace));
  return gauge_volume_mc(subspace_ball_body(norm, subspace), opts.mc_samples, opts.seed);
}

// ---------------------------------------------------------------------------
// Theorem 2 construction

EnclosingCrossPolytope build_enclosing_polytope(const UnconditionalNorm& norm,
                                                const SubspaceBasis& subspace,
                                                const EmbeddingMaps& maps,
                                                const ProjectionFrame& frame,
                                                const SubsetSelection& selection,
                                                const EncloseOptions& opts) {
  const int n = subspace.ambient_dim();
  const int k = subspace.sub_dim();
  if (static_cast<int>(selection.sigma.size()) != k)
    throw InvalidInput("build_enclosing_polytope: selection size mismatch");

  EnclosingCrossPolytope out;
  out.selection = selection;
  out.bound = std::pow(std::numbers::e * n / k, 2.0);

  const Matrix e_frame = subspace.frame();

  if (k == 1) {
    // A one-dimensional ball is a segment; its boundary point generates it
    // exactly, so the enclosing cross-polytope is B_E itself.
    Vector z = subspace.basis().col(0);
    z /= norm.eval(z);
    out.vertices = {z};
    out.vertices_in_frame = e_frame.transpose() * z;
    const double half = out.vertices_in_frame.col(0).norm();
    out.absconv_volume = 2.0 * half;
    out.ball_volume.value = 2.0 * half;
    out.ball_volume.method = VolumeEstimate::Method::DeterminantFormula;
    out.ratio = out.ratio_conservative = 1.0;
    out.containment.samples = 2;
    out.containment.max_gauge = 1.0;
    return out;
  }

  // Vertices of the sigma-norm ball in the H frame: columns of M^{-1} where
  // M has rows x_j^T, j in sigma.
  Matrix m(k, k);
  for (int j = 0; j < k; ++j) m.row(j) = frame.h_basis.col(selection.sigma[j]).transpose();
  Eigen::PartialPivLU<Matrix> lu(m);
  const Matrix m_inv = lu.inverse();

  out.vertices_in_frame.resize(k, k);
  out.vertices.reserve(k);
  for (int j = 0; j < k; ++j) {
    const Vector v_h = m_inv.col(j);                     // in H frame
    const Vector v_amb = frame.h_basis.transpose() * v_h;  // in l1^n
    Vector y = maps.s_diag.cwiseProduct(v_amb);          // back through T^{-1}
    out.vertices_in_frame.col(j) = e_frame.transpose() * y;
    out.vertices.push_back(std::move(y));
  }

  const double det_y =
      std::abs(Eigen::PartialPivLU<Matrix>(out.vertices_in_frame).determinant());
  out.absconv_volume = std::pow(2.0, k) / factorial(k) * det_y;

  out.ball_volume = subspace_ball_volume(norm, subspace, opts.ball);
  out.ratio = std::pow(out.absconv_volume / out.ball_volume.value, 1.0 / k);
  const double den_lo = std::max(out.ball_volume.lower3(), 1e-300);
  out.ratio_conservative = std::pow(out.absconv_volume / den_lo, 1.0 / k);
  const double den_hi = out.ball_volume.upper3();
  const double ratio_certain = std::pow(out.absconv_volume / den_hi, 1.0 / k);
  if (ratio_certain > out.bound)
    throw NumericalError(
        "build_enclosing_polytope: ratio exceeds (e n/k)^2 — solver or volume bug");

  // Containment: sampled boundary points of B_E against the gauge of
  // absconv{y}, which is |Y^{-1} c|_1 in frame coordinates.
  Eigen::PartialPivLU<Matrix> y_lu(out.vertices_in_frame);
  Rng rng(opts.seed);
  out.containment.samples = opts.containment_samples;
  for (int s = 0; s < opts.containment_samples; ++s) {
    Vector c = rng.gaussian_vector(k);
    const double g = norm.eval(e_frame * c);
    if (g <= 1e-150) continue;
    c /= g;  // boundary point of B_E in frame coordinates
    const double gauge = y_lu.solve(c).cwiseAbs().sum();
    out.containment.max_gauge = std::max(out.containment.max_gauge, gauge);
    if (gauge > 1.0 + 1e-6) ++out.containment.violations;
  }
  return out;
}

EnclosingCrossPolytope enclose_subspace(const UnconditionalNorm& norm,
                                        const SubspaceBasis& subspace,
                                        const EncloseOptions& opts) {
  const auto cert = solve_weights(norm);
  const auto maps = build_embedding(norm, cert);
  const auto frame = embed_subspace(subspace, maps);
  const auto sel =
      select_max_det_subset(frame, subspace.sub_dim(), opts.method, opts.subset_cap);
  return build_enclosing_polytope(norm, subspace, maps, frame, sel, opts);
}

// ---------------------------------------------------------------------------
// Lemma 2

Lemma2Report check_lemma2(const UnconditionalNorm& norm, const SubspaceBasis& subspace,
                          const EmbeddingMaps& maps, const BallVolumeOptions& opts) {
  const int n = subspace.ambient_dim();
  const int k = subspace.sub_dim();
  Lemma2Report report;
  report.bound = std::numbers::e * n / k;

  // T^{-1}(B_1^n) ∩ E in frame coordinates is {c : |A c|_1 <= 1} with
  // A = diag(t) * F: the polar of the zonotope spanned by the rows of A.
  const Matrix a = maps.t_diag.asDiagonal() * subspace.frame();  // n x k
  if (n <= 16) {
    std::vector<Vector> zono_pts;
    zono_pts.reserve(size_t{1} << n);
    Vector signs(n);
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      for (int i = 0; i < n; ++i) signs[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      zono_pts.push_back(a.transpose() * signs);
    }
    if (k == 1) {
      double hi = 0.0;
      for (const auto& z : zono_pts) hi = std::max(hi, std::abs(z[0]));
      report.pullback_volume.value = 2.0 / hi;
      report.pullback_volume.method = VolumeEstimate::Method::ExactTriangulation;
    } else {
      ConvexHull zono = robust_hull(zono_pts, k);
      std::vector<Vector> verts;
      for (const auto& f : zono.merged_facets()) {
        if (f.offset <= zono.tolerance())
          throw NumericalError("check_lemma2: zonotope degenerate");
        verts.push_back(f.normal / f.offset);
      }
      report.pullback_volume = volume_vrep(PolytopeV(k, verts));
    }
  } else {
    GaugeBody body;
    body.dim = k;
    body.gauge = [a](const Vector& c) { return (a * c).cwiseAbs().sum(); };
    Eigen::JacobiSVD<Matrix> svd(a);
    body.box_radius = 1.0 / svd.singularValues()[k - 1];
    body.inradius = 1.0 / (std::sqrt(static_cast<double>(n)) * svd.singularValues()[0]);
    report.pullback_volume = gauge_volume_mc(body, opts.mc_samples, opts.seed ^ 0xF00D);
  }

  report.ball_volume = subspace_ball_volume(norm, subspace, opts);
  report.ratio = std::pow(report.pullback_volume.value / report.ball_volume.value,
                          1.0 / k);
  report.ratio_conservative =
      std::pow(report.pullback_volume.upper3() /
                   std::max(report.ball_volume.lower3(), 1e-300),
               1.0 / k);
  report.pass = report.ratio_conservative <= report.bound;
  return report;
}

// ---------------------------------------------------------------------------
// Quotients (Remark 1)

double quotient_gauge_lower(const UnconditionalNorm& norm, const Matrix& quotient,
                            const Vector& y, int directions) {
  const int k = static_cast<int>(quotient.rows());
  const UnconditionalNorm dual = norm.dual();
  auto ratio = [&](const Vector& c) {
    const double den = dual.eval(quotient.transpose() * c);
    if (den <= 1e-300) return 0.0;
    return c.dot(y) / den;
  };
  double best = 0.0;
  Vector best_c = Vector::Unit(k, 0);
  auto consider = [&](const Vector& c) {
    const double r = ratio(c);
    if (r > best) {
      best = r;
      best_c = c;
    }
  };
  for (int i = 0; i < k; ++i) {
    consider(Vector::Unit(k, i));
    consider(-Vector::Unit(k, i));
  }
  if (y.norm() > 0.0) consider(y / y.norm());
  Rng rng(0xC0DE ^ static_cast<uint64_t>(directions));
  for (int i = 0; i < directions; ++i) consider(rng.unit_vector(k));
  double step = 0.5;
  for (int iter = 0; iter < 60; ++iter) {
    bool improved = false;
    for (int i = 0; i < k; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vector c = best_c + sgn * step * Vector::Unit(k, i);
        const double cn = c.norm();
        if (cn <= 1e-12) continue;
        c /= cn;
        const double r = ratio(c);
        if (r > best) {
          best = r;
          best_c = c;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

QuotientCubeReport quotient_cube(const UnconditionalNorm& norm, const Matrix& quotient,
                                 const EncloseOptions& opts) {
  const int n = norm.dim();
  const int k = static_cast<int>(quotient.rows());
  if (static_cast<int>(quotient.cols()) != n)
    throw InvalidInput("quotient_cube: quotient must be k x n");
  {
    Eigen::JacobiSVD<Matrix> svd(quotient);
    if (k > n || svd.singularValues()[k - 1] <= 1e-10 * std::max(1.0, svd.singularValues()[0]))
      throw InvalidInput("quotient not surjective");
  }

  // Dual of the quotient is the subspace range(Q^T) of X* carrying the dual
  // norm; run the subspace pipeline there and polarize the result.
  const UnconditionalNorm dual = norm.dual();
  const SubspaceBasis dual_subspace(n, k, quotient.transpose());
  const auto enclosing = enclose_subspace(dual, dual_subspace, opts);

  QuotientCubeReport report;
  report.bound = std::pow(std::numbers::e * n / k, 2.0);

  // y*_j = Q^T c_j  (exact solve; y*_j lies in range(Q^T) by construction).
  Matrix c_rows(k, k);
  {
    const Matrix qt = quotient.transpose();  // n x k
    Eigen::ColPivHouseholderQR<Matrix> solver(qt);
    for (int j = 0; j < k; ++j)
      c_rows.row(j) = solver.solve(enclosing.vertices[j]).transpose();
  }
  report.cube_map = c_rows;
  const double det = std::abs(Eigen::PartialPivLU<Matrix>(c_rows).determinant());
  if (det <= 0.0) throw NumericalError("quotient_cube: degenerate cube");
  report.cube_volume = std::pow(2.0, k) / det;

  // Quotient ball volume: exact as an image of the unit-ball polytope.
  if (norm.is_polytopal()) {
    std::vector<Vector> image;
    for (const auto& v : norm.unit_ball_vertices()) image.push_back(quotient * v);
    ConvexHull hull = robust_hull(image, k);
    if (!hull.full_dimensional())
      throw NumericalError("quotient_cube: quotient ball degenerate");
    report.ball_volume.value = hull.volume();
    report.ball_volume.method = VolumeEstimate::Method::ExactTriangulation;
    // Containment of the cube corners via the exact gauge (max over facets).
    const auto merged = hull.merged_facets();
    Eigen::PartialPivLU<Matrix> lu(c_rows);
    report.containment.samples = 1 << k;
    Vector corner(k);
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      for (int i = 0; i < k; ++i) corner[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      const Vector y = lu.solve(corner);
      double gauge = 0.0;
      for (const auto& f : merged) gauge = std::max(gauge, f.normal.dot(y) / f.offset);
      report.containment.max_gauge = std::max(report.containment.max_gauge, gauge);
      if (gauge > 1.0 + 1e-6) ++report.containment.violations;
    }
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
      return dual->eval(quotient.transpose() * c);  // exact for Q(B_X)
    };
    report.ball_volume = gauge_volume_mc(body, opts.ball.mc_samples, opts.ball.seed);
    Eigen::PartialPivLU<Matrix> lu(c_rows);
    report.containment.samples = 1 << k;
    Vector corner(k);
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      for (int i = 0; i < k; ++i) corner[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      const double gauge = body.gauge(lu.solve(corner));
      report.containment.max_gauge = std::max(report.containment.max_gauge, gauge);
      if (gauge > 1.0 + 1e-6) ++report.containment.violations;
    }
  }

  report.ratio = std::pow(report.ball_volume.value / report.cube_volume, 1.0 / k);
  report.ratio_conservative =
      std::pow(report.ball_volume.upper3() / report.cube_volume, 1.0 / k);
  if (std::pow(std::max(report.ball_volume.lower3(), 1e-300) / report.cube_volume,
               1.0 / k) > report.bound)
    throw NumericalError("quotient_cube: ratio exceeds (e n/k)^2 — pipeline bug");
  return report;
}

}  // namespace lozvol
