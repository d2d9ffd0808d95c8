#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lozvol/hull.hpp"
#include "lozvol/rng.hpp"
#include "lozvol/subspace.hpp"
#include "oracles.hpp"

using namespace lozvol;

namespace {

EmbeddingMaps identity_maps(int n) {
  EmbeddingMaps maps;
  maps.t_diag = Vector::Ones(n);
  maps.s_diag = Vector::Ones(n);
  return maps;
}

Matrix random_basis(int n, int k, Rng& rng) {
  for (;;) {
    Matrix m(n, k);
    for (int j = 0; j < k; ++j) m.col(j) = rng.gaussian_vector(n);
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues()[k - 1] > 1e-3) return m;
  }
}

UnconditionalNorm random_polytopal_norm(int dim, Rng& rng) {
  Vector w(dim);
  for (int i = 0; i < dim; ++i) w[i] = rng.uniform(0.5, 2.0);
  return UnconditionalNorm::lp(rng.uniform() < 0.5 ? 1.0 : kInf, w);
}

}  // namespace

TEST_CASE("count_subsets / unrank_subset enumerate lexicographically") {
  CHECK(count_subsets(10, 3) == 120);
  CHECK(count_subsets(4, 0) == 1);
  std::vector<int> prev;
  for (long r = 0; r < count_subsets(6, 3); ++r) {
    const auto combo = unrank_subset(r, 6, 3);
    CHECK(combo.size() == 3);
    if (!prev.empty())
      CHECK(std::lexicographical_compare(prev.begin(), prev.end(), combo.begin(),
                                         combo.end()));
    prev = combo;
  }
}

TEST_CASE("embed_subspace: identity embedding of the full space") {
  const int n = 4;
  const SubspaceBasis full(n, n, Matrix::Identity(n, n));
  const auto frame = embed_subspace(full, identity_maps(n));
  Matrix gram = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    gram += frame.generator(j) * frame.generator(j).transpose();
  CHECK((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((frame.h_basis * frame.h_basis.transpose() - Matrix::Identity(n, n))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("embed_subspace: diagonal line in the plane") {
  Matrix basis(2, 1);
  basis << 1, 1;
  const SubspaceBasis line(2, 1, basis);
  const auto frame = embed_subspace(line, identity_maps(2));
  CHECK(std::abs(frame.generator(0)[0]) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(frame.generator(1)[0]) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("embed_subspace: Gram resolution of the identity on random instances") {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rng.uniform_int(2, 10);
    const int k = rng.uniform_int(1, n);
    const SubspaceBasis sub(n, k, random_basis(n, k, rng));
    EmbeddingMaps maps;
    maps.s_diag = rng.gaussian_vector(n).cwiseAbs() + Vector::Constant(n, 0.2);
    maps.t_diag = maps.s_diag.cwiseInverse();
    const auto frame = embed_subspace(sub, maps);
    Matrix gram = Matrix::Zero(k, k);
    for (int j = 0; j < n; ++j)
      gram += frame.generator(j) * frame.generator(j).transpose();
    CHECK((gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("polar_zonotope_volume: closed cases") {
  const int n = 4;
  const auto frame =
      embed_subspace(SubspaceBasis(n, n, Matrix::Identity(n, n)), identity_maps(n));
  CHECK(polar_zonotope_volume(frame, n) == doctest::Approx(16.0).epsilon(1e-12));

  Matrix diag_basis(2, 1);
  diag_basis << 1, 1;
  const auto line = embed_subspace(SubspaceBasis(2, 1, diag_basis), identity_maps(2));
  CHECK(polar_zonotope_volume(line, 1) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("polar_zonotope_volume: determinant sum equals hull-based polar volume") {
  Rng rng(47);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + rep % 4;  // 3..6
    const int k = 2 + rep % 2;  // 2..3
    if (k > n) continue;
    const SubspaceBasis sub(n, k, random_basis(n, k, rng));
    const auto frame = embed_subspace(sub, identity_maps(n));
    const double by_formula = polar_zonotope_volume(frame, k);
    // Oracle: (B_1^n ∩ H)° = conv of the projected sign vectors.
    std::vector<Vector> pts;
    Vector signs(n);
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      for (int i = 0; i < n; ++i) signs[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      pts.push_back(frame.h_basis * signs);
    }
    const double by_hull = robust_hull(pts, k).volume();
    CHECK(by_formula == doctest::Approx(by_hull).epsilon(1e-8));
  }
}

TEST_CASE("polar_zonotope_volume: enumeration cap") {
  const int n = 16;
  Rng rng(2);
  const SubspaceBasis sub(n, 8, random_basis(n, 8, rng));
  const auto frame = embed_subspace(sub, identity_maps(n));
  CHECK_THROWS_AS(polar_zonotope_volume(frame, 8, 1000), InvalidInput);
}

TEST_CASE("select_max_det_subset: exact and greedy behavior") {
  const int n = 4;
  const auto full =
      embed_subspace(SubspaceBasis(n, n, Matrix::Identity(n, n)), identity_maps(n));
  const auto sel = select_max_det_subset(full, n, SubsetSelection::Method::Exact);
  CHECK(sel.sigma == std::vector<int>{0, 1, 2, 3});
  CHECK(sel.abs_det == doctest::Approx(1.0));

  Matrix diag_basis(2, 1);
  diag_basis << 1, 1;
  const auto line = embed_subspace(SubspaceBasis(2, 1, diag_basis), identity_maps(2));
  const auto sel1 = select_max_det_subset(line, 1, SubsetSelection::Method::Exact);
  CHECK(sel1.sigma == std::vector<int>{0});  // tie broken lexicographically
  CHECK(sel1.abs_det == doctest::Approx(1.0 / std::sqrt(2.0)));

  Rng rng(53);
  const double fact = 6.0;  // k = 3
  for (int rep = 0; rep < 12; ++rep) {
    const SubspaceBasis sub(8, 3, random_basis(8, 3, rng));
    const auto frame = embed_subspace(sub, identity_maps(8));
    const auto exact = select_max_det_subset(frame, 3, SubsetSelection::Method::Exact);
    const auto greedy = select_max_det_subset(frame, 3, SubsetSelection::Method::Greedy);
    CHECK(exact.abs_det >= greedy.abs_det * (1.0 - 1e-12));
    CHECK(greedy.abs_det >= exact.abs_det / fact * (1.0 - 1e-12));
  }
}

TEST_CASE("build_enclosing_polytope: l1 full space is exact") {
  for (int n : {2, 3, 4}) {
    const auto l1 = UnconditionalNorm::lp_uniform(1.0, n);
    const auto poly = enclose_subspace(l1, SubspaceBasis(n, n, Matrix::Identity(n, n)));
    CHECK(poly.ratio == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(poly.containment.max_gauge <= 1.0 + 1e-6);
    CHECK(poly.ratio <= poly.bound);
  }
}

TEST_CASE("build_enclosing_polytope: l-infinity plane") {
  const auto linf = UnconditionalNorm::lp_uniform(kInf, 2);
  const auto poly = enclose_subspace(linf, SubspaceBasis(2, 2, Matrix::Identity(2, 2)));
  CHECK(poly.ratio <= std::pow(std::numbers::e, 2.0));
  CHECK(poly.containment.max_gauge <= 1.0 + 1e-6);
  CHECK(poly.ball_volume.value == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("build_enclosing_polytope: any k = 1 subspace is tight") {
  Rng rng(57);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = rng.uniform_int(2, 6);
    const auto norm = random_polytopal_norm(n, rng);
    const auto poly =
        enclose_subspace(norm, SubspaceBasis(n, 1, random_basis(n, 1, rng)));
    CHECK(poly.ratio <= 1.0 + 1e-8);
    CHECK(poly.ratio >= 1.0 - 1e-8);
  }
}

TEST_CASE("build_enclosing_polytope: bound, containment and lemma 2 on random instances") {
  Rng rng(61);
  for (int rep = 0; rep < 15; ++rep) {
    const int n = rng.uniform_int(2, 7);
    const int k = rng.uniform_int(1, std::min(n, 4));
    const auto norm = random_polytopal_norm(n, rng);
    const SubspaceBasis sub(n, k, random_basis(n, k, rng));
    const auto cert = solve_weights(norm);
    const auto maps = build_embedding(norm, cert);
    const auto frame = embed_subspace(sub, maps);
    const auto sel = select_max_det_subset(frame, k, SubsetSelection::Method::Exact);
    const auto poly = build_enclosing_polytope(norm, sub, maps, frame, sel);
    CHECK(poly.ratio_conservative <= poly.bound);
    CHECK(poly.containment.violations == 0);
    const auto lemma2 = check_lemma2(norm, sub, maps);
    CHECK(lemma2.pass);
    CHECK(lemma2.ratio_conservative <= std::numbers::e * n / k);
    // The sigma-ball step only enlarges the pullback section; at k = 1 the
    // emitted vertex is boundary-normalized, so the chain does not apply.
    if (k > 1) CHECK(poly.ratio >= lemma2.ratio * (1.0 - 1e-9));
  }
}

TEST_CASE("pipeline invariance: permuting coordinates permutes weights, same ratio") {
  Rng rng(67);
  const int n = 5, k = 2;
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform(0.5, 2.0);
  const auto norm = UnconditionalNorm::lp(1.0, w);
  const Matrix basis = random_basis(n, k, rng);

  std::vector<int> perm = {3, 0, 4, 1, 2};
  Vector wp(n);
  Matrix basis_p(n, k);
  for (int i = 0; i < n; ++i) {
    wp[perm[i]] = w[i];
    basis_p.row(perm[i]) = basis.row(i);
  }
  const auto norm_p = UnconditionalNorm::lp(1.0, wp);

  const auto cert = solve_weights(norm);
  const auto cert_p = solve_weights(norm_p);
  for (int i = 0; i < n; ++i)
    CHECK(cert_p.weights[perm[i]] == doctest::Approx(cert.weights[i]).epsilon(1e-9));

  const auto poly = enclose_subspace(norm, SubspaceBasis(n, k, basis));
  const auto poly_p = enclose_subspace(norm_p, SubspaceBasis(n, k, basis_p));
  CHECK(poly_p.ratio == doctest::Approx(poly.ratio).epsilon(1e-10));
}

TEST_CASE("quotient_cube: identity quotients of l1 and l-infinity") {
  for (int n : {2, 3, 4}) {
    const auto linf = UnconditionalNorm::lp_uniform(kInf, n);
    const auto rep_inf = quotient_cube(linf, Matrix::Identity(n, n));
    CHECK(rep_inf.ratio == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep_inf.containment.violations == 0);

    const auto l1 = UnconditionalNorm::lp_uniform(1.0, n);
    const auto rep_1 = quotient_cube(l1, Matrix::Identity(n, n));
    CHECK(rep_1.ratio <= std::pow(std::numbers::e, 2.0));
    CHECK(rep_1.containment.violations == 0);
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    CHECK(rep_1.ratio ==
          doctest::Approx(std::pow(std::pow(double(n), n) / fact, 1.0 / n)).epsilon(1e-8));
  }
}

TEST_CASE("quotient_cube: random quotients stay within the bound") {
  Rng rng(71);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 4 + rep % 3;  // 4..6
    const int k = 2 + rep % 2;  // 2..3
    const auto norm = random_polytopal_norm(n, rng);
    const Matrix q = random_basis(n, k, rng).transpose();
    const auto report = quotient_cube(norm, q);
    CHECK(report.ratio_conservative <= report.bound);
    CHECK(report.ratio <= std::pow(2.0 * std::numbers::e, 2.0));
    CHECK(report.containment.violations == 0);
  }
  Matrix bad(2, 3);
  bad << 1, 1, 0, 1, 1, 0;
  CHECK_THROWS_WITH_AS(quotient_cube(UnconditionalNorm::lp_uniform(1.0, 3), bad),
                       doctest::Contains("not surjective"), InvalidInput);
}

TEST_CASE("subspace_ball_volume: sections of l1^3 match the polygon oracle") {
  Rng rng(73);
  const auto l1 = UnconditionalNorm::lp_uniform(1.0, 3);
  for (int rep = 0; rep < 8; ++rep) {
    const SubspaceBasis sub(3, 2, random_basis(3, 2, rng));
    const auto exact = subspace_ball_volume(l1, sub);
    // Oracle: B_E is the central section of B_1^3 by the plane of the frame.
    const Matrix f = sub.frame();
    Vector normal(3);
    normal << f(1, 0) * f(2, 1) - f(2, 0) * f(1, 1),
        f(2, 0) * f(0, 1) - f(0, 0) * f(2, 1),
        f(0, 0) * f(1, 1) - f(1, 0) * f(0, 1);
    CHECK(exact.value ==
          doctest::Approx(oracles::b1_3_section_area(normal)).epsilon(1e-9));
    const auto mc = gauge_volume_mc(subspace_ball_body(l1, sub), 60000, 900 + rep);
    CHECK(std::abs(mc.value - exact.value) <= 3.0 * mc.std_error);
  }
}
