#include "lozvol/lozanovskii.hpp"

#include <algorithm>
#include <cmath>

#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

Vector gather(const Vector& v, const std::vector<int>& coords) {
  Vector out(static_cast<int>(coords.size()));
  for (size_t i = 0; i < coords.size(); ++i) out[static_cast<int>(i)] = v[coords[i]];
  return out;
}

void balanced_subgradient_rec(const UnconditionalNorm& norm, const Vector& lambda,
                              double scale, Vector& g,
                              const std::vector<int>& coords, double width,
                              bool smooth) {
  switch (norm.kind()) {
    case UnconditionalNorm::Kind::Lp: {
      const Vector& w = norm.weights();
      const int d = norm.dim();
      Vector u(d);
      for (int i = 0; i < d; ++i) u[i] = w[i] * lambda[i];
      if (norm.p() == kInf) {
        const double m = u.maxCoeff();
        // Spread the subgradient over the near-active set, equalizing
        // lambda_i g_i. `width` ramps the activity weight continuously so
        // the ascent direction does not jump at crossing points.
        double total = 0.0;
        Vector act = Vector::Zero(d);
        for (int i = 0; i < d; ++i) {
          const double x = (u[i] / m - (1.0 - width)) / width;
          if (x <= 0.0) continue;
          act[i] = (smooth ? std::min(x, 1.0) : 1.0) / u[i];
          total += act[i];
        }
        for (int i = 0; i < d; ++i)
          if (act[i] > 0.0) g[coords[i]] = scale * act[i] / total * w[i];
      } else {
        const double p = norm.p();
        const double nl = norm.eval(lambda);
        for (int i = 0; i < d; ++i)
          g[coords[i]] = scale * w[i] * std::pow(u[i] / nl, p - 1.0);
      }
      return;
    }
    case UnconditionalNorm::Kind::Sum: {
      for (const auto& b : norm.blocks()) {
        std::vector<int> sub_coords(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub_coords[i] = coords[b.coords[i]];
        balanced_subgradient_rec(*b.norm, gather(lambda, b.coords), scale, g, sub_coords,
                                 width, smooth);
      }
      return;
    }
    case UnconditionalNorm::Kind::Max: {
      double m = 0.0;
      std::vector<double> vals;
      vals.reserve(norm.blocks().size());
      for (const auto& b : norm.blocks()) {
        vals.push_back(b.norm->eval(gather(lambda, b.coords)));
        m = std::max(m, vals.back());
      }
      // Weight near-active blocks by size; at the optimum the block
      // multipliers are proportional to the block dimensions.
      double total = 0.0;
      std::vector<double> act(norm.blocks().size(), 0.0);
      for (size_t bi = 0; bi < norm.blocks().size(); ++bi) {
        const double x = (vals[bi] / m - (1.0 - width)) / width;
        if (x <= 0.0) continue;
        act[bi] = (smooth ? std::min(x, 1.0) : 1.0) *
                  static_cast<double>(norm.blocks()[bi].coords.size());
        total += act[bi];
      }
      for (size_t bi = 0; bi < norm.blocks().size(); ++bi) {
        if (act[bi] <= 0.0) continue;
        const auto& b = norm.blocks()[bi];
        const double theta = act[bi] / total;
        std::vector<int> sub_coords(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub_coords[i] = coords[b.coords[i]];
        balanced_subgradient_rec(*b.norm, gather(lambda, b.coords), scale * theta, g,
                                 sub_coords, width, smooth);
      }
      return;
    }
  }
}

// Smooth pseudo-gradient for the ascent direction: inf-leaves weight their
// subdifferential vertices by coordinate value and max nodes weight blocks
// by size * value. Not a
// subgradient away from the optimum, but its unique fixed point under
// lambda_i g_i = 1/n is the KKT point, and it varies smoothly across the
// nonsmooth creases (Armijo on the true objective guards every step).
void rebalance_field_rec(const UnconditionalNorm& norm, const Vector& lambda,
                         double scale, Vector& g, const std::vector<int>& coords) {
  switch (norm.kind()) {
    case UnconditionalNorm::Kind::Lp: {
      const Vector& w = norm.weights();
      const int d = norm.dim();
      if (norm.p() == kInf) {
        // Weights proportional to w_i lambda_i: coordinates above the leaf
        // mean are pushed down, below pushed up; fixed point = all equal.
        double total = 0.0;
        for (int i = 0; i < d; ++i) total += w[i] * lambda[i];
        for (int i = 0; i < d; ++i)
          g[coords[i]] = scale * (w[i] * lambda[i] / total) * w[i];
      } else {
        const double p = norm.p();
        const double nl = norm.eval(lambda);
        for (int i = 0; i < d; ++i)
          g[coords[i]] = scale * w[i] * std::pow(w[i] * lambda[i] / nl, p - 1.0);
      }
      return;
    }
    case UnconditionalNorm::Kind::Sum: {
      for (const auto& b : norm.blocks()) {
        std::vector<int> sub_coords(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub_coords[i] = coords[b.coords[i]];
        rebalance_field_rec(*b.norm, gather(lambda, b.coords), scale, g, sub_coords);
      }
      return;
    }
    case UnconditionalNorm::Kind::Max: {
      double total = 0.0;
      std::vector<double> weight(norm.blocks().size(), 0.0);
      for (size_t bi = 0; bi < norm.blocks().size(); ++bi) {
        const auto& b = norm.blocks()[bi];
        weight[bi] = static_cast<double>(b.coords.size()) *
                     b.norm->eval(gather(lambda, b.coords));
        total += weight[bi];
      }
      for (size_t bi = 0; bi < norm.blocks().size(); ++bi) {
        const auto& b = norm.blocks()[bi];
        std::vector<int> sub_coords(b.coords.size());
        for (size_t i = 0; i < b.coords.size(); ++i) sub_coords[i] = coords[b.coords[i]];
        rebalance_field_rec(*b.norm, gather(lambda, b.coords), scale * weight[bi] / total,
                            g, sub_coords);
      }
      return;
    }
  }
}

Vector rebalance_field(const UnconditionalNorm& norm, const Vector& lambda) {
  Vector g = Vector::Zero(norm.dim());
  std::vector<int> coords(norm.dim());
  for (int i = 0; i < norm.dim(); ++i) coords[i] = i;
  rebalance_field_rec(norm, lambda, 1.0, g, coords);
  return g;
}

double kkt_residual(int n, const Vector& lambda, const Vector& g) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(n * lambda[i] * g[i] - 1.0));
  return worst;
}

}  // namespace

Vector balanced_subgradient(const UnconditionalNorm& norm, const Vector& lambda,
                            double activity_width, bool smooth) {
  if (static_cast<int>(lambda.size()) != norm.dim())
    throw InvalidInput("balanced_subgradient: dimension mismatch");
  Vector g = Vector::Zero(norm.dim());
  std::vector<int> coords(norm.dim());
  for (int i = 0; i < norm.dim(); ++i) coords[i] = i;
  balanced_subgradient_rec(norm, lambda, 1.0, g, coords, activity_width, smooth);
  return g;
}

LozanovskiiCertificate solve_weights(const UnconditionalNorm& norm,
                                     const SolveOptions& opts) {
  const int n = norm.dim();
  auto finish = [&norm, n](Vector lambda, int iterations) {
    lambda /= norm.eval(lambda);
    LozanovskiiCertificate cert;
    cert.weights = lambda;
    cert.objective = lambda.array().log().sum();
    cert.norm_of_lambda = norm.eval(lambda);
    cert.kkt_residual = kkt_residual(n, lambda, balanced_subgradient(norm, lambda));
    cert.iterations = iterations;
    // Built-in lower-inequality probe; the thorough check is verify_certificate.
    Rng rng(0xB0B1);
    double worst = 0.0;
    for (int s = 0; s < 256; ++s) {
      const Vector a = rng.gaussian_vector(n);
      const double lhs = a.cwiseAbs().sum() / n;
      const double rhs = norm.eval(lambda.cwiseProduct(a));
      worst = std::max(worst, lhs / rhs - 1.0);
    }
    cert.lower_residual = std::max(0.0, worst);
    return cert;
  };

  if (n == 1) {
    Vector lambda(1);
    lambda[0] = 1.0 / norm.eval(Vector::Ones(1));
    return finish(lambda, 0);
  }

  // Ascent in u = log(lambda) coordinates, where the problem
  //   maximize 1'u  subject to  N(exp(u)) <= 1
  // is concave. The move is u += t * d with d = 1 - n * (lambda ∘ g), followed
  // by the radial projection lambda <- lambda / N(lambda) (a constant shift of
  // u). d is the gradient of the scale-invariant 1'u - n log N(exp(u)), so
  // backtracking Armijo applies directly; at the optimum d = 0 is the KKT
  // condition.
  Vector lambda = Vector::Ones(n);
  lambda /= norm.eval(lambda);
  double obj = lambda.array().log().sum();
  std::vector<double> history;
  if (opts.record_history) history.push_back(obj);

  Vector dir_prev, u_prev;
  double step = 1.0;
  int stall = 0;
  double kkt = kInf;

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Vector g_strict = balanced_subgradient(norm, lambda);
    kkt = kkt_residual(n, lambda, g_strict);
    if (kkt <= opts.kkt_tol) break;
    Vector dir_strict(n);
    for (int i = 0; i < n; ++i) dir_strict[i] = 1.0 - n * lambda[i] * g_strict[i];
    const Vector g = rebalance_field(norm, lambda);
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir[i] = 1.0 - n * lambda[i] * g[i];
    // Line-search slope along the smooth direction, measured against the
    // strict subgradient; fall back to the strict direction when the smooth
    // field is not an ascent direction here.
    double dir_sq = dir.dot(dir_strict);
    if (dir_sq <= 1e-12 * dir.norm() * dir_strict.norm()) {
      dir = dir_strict;
      dir_sq = dir_strict.squaredNorm();
    }

    const Vector u = lambda.array().log();
    if (dir_prev.size() > 0) {
      const Vector s = u - u_prev;
      const Vector y = dir - dir_prev;
      const double sy = -s.dot(y);
      if (sy > 1e-300)
        step = std::min(std::max(s.squaredNorm() / sy, 1e-10), 1e2);
      else
        step = 1.0;
    }
    u_prev = u;
    dir_prev = dir;

    bool accepted = false;
    double t = step;
    Vector best_polish;
    double best_polish_kkt = kkt, best_polish_obj = obj;
    for (int ls = 0; ls < 60 && !accepted; ++ls, t *= 0.5) {
      Vector trial(n);
      for (int i = 0; i < n; ++i)
        trial[i] = lambda[i] * std::exp(std::clamp(t * dir[i], -30.0, 30.0));
      trial /= norm.eval(trial);  // radial projection, exact by homogeneity
      const double trial_obj = trial.array().log().sum();
      if (trial_obj >= obj + 1e-4 * t * dir_sq) {
        const double rel = (trial_obj - obj) / std::max(1.0, std::abs(trial_obj));
        stall = rel < 1e-12 ? stall + 1 : 0;
        lambda = std::move(trial);
        obj = trial_obj;
        accepted = true;
        break;
      }
      // Polish fallback near the floating-point floor: keep monotone
      // objective but make progress on the residual.
      if (trial_obj >= obj) {
        const double tk =
            kkt_residual(n, trial, balanced_subgradient(norm, trial));
        if (tk < best_polish_kkt) {
          best_polish_kkt = tk;
          best_polish_obj = trial_obj;
          best_polish = trial;
        }
      }
    }
    if (!accepted) {
      if (best_polish.size() > 0 && best_polish_kkt < kkt * (1.0 - 1e-3)) {
        lambda = best_polish;
        obj = best_polish_obj;
      } else {
        ++stall;
      }
    }
    if (opts.record_history) history.push_back(obj);
    if (stall >= 20) break;
  }

  if (it >= opts.max_iter && kkt > opts.kkt_tol && stall < 20) {
    throw SolverError("solve_weights: no convergence after max_iter", finish(lambda, it));
  }
  auto cert = finish(lambda, it);
  cert.objective_history = std::move(history);
  return cert;
}

CertificateReport verify_certificate(const UnconditionalNorm& norm,
                                     const LozanovskiiCertificate& cert,
                                     long samples, uint64_t seed) {
  const int n = norm.dim();
  if (static_cast<int>(cert.weights.size()) != n)
    throw InvalidInput("verify_certificate: weights dimension mismatch");
  CertificateReport report;
  report.norm_of_lambda = norm.eval(cert.weights);

  auto check = [&](const Vector& a) {
    const double l1 = a.cwiseAbs().sum();
    const double linf = a.cwiseAbs().maxCoeff();
    if (l1 <= 0.0) return;
    const double val = norm.eval(cert.weights.cwiseProduct(a));
    report.left_worst_ratio = std::min(report.left_worst_ratio, n * val / l1);
    report.right_worst_ratio = std::max(report.right_worst_ratio, val / linf);
    ++report.checked;
  };

  if (n <= 16) {
    const size_t count = size_t{1} << n;
    Vector a(n);
    for (size_t mask = 0; mask < count; ++mask) {
      for (int i = 0; i < n; ++i) a[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      check(a);
    }
  }
  check(Vector::Ones(n));
  for (int i = 0; i < n; ++i) check(Vector::Unit(n, i));
  Rng rng(seed);
  for (long s = 0; s < samples; ++s) check(rng.gaussian_vector(n));

  report.pass_left = report.left_worst_ratio >= 1.0 - 1e-8;
  report.pass_right = report.right_worst_ratio <= 1.0 + 1e-8;
  report.pass = report.pass_left && report.pass_right &&
                report.norm_of_lambda <= 1.0 + 1e-9;
  return report;
}

EmbeddingMaps build_embedding(const UnconditionalNorm& norm,
                              const LozanovskiiCertificate& cert, long samples,
                              uint64_t seed) {
  const int n = norm.dim();
  if (static_cast<int>(cert.weights.size()) != n)
    throw InvalidInput("build_embedding: weights dimension mismatch");
  if (cert.weights.minCoeff() <= 0.0)
    throw InvalidInput("build_embedding: weights must be positive");

  EmbeddingMaps maps;
  maps.s_diag = static_cast<double>(n) * cert.weights;
  maps.t_diag = maps.s_diag.cwiseInverse();

  auto probe = [&](const Vector& a) {
    const double na = norm.eval(a);
    if (na > 0.0)
      maps.t_norm_bound =
          std::max(maps.t_norm_bound, maps.t_diag.cwiseProduct(a).cwiseAbs().sum() / na);
    const double linf = a.cwiseAbs().maxCoeff();
    if (linf > 0.0)
      maps.s_norm_bound =
          std::max(maps.s_norm_bound,
                   norm.eval(maps.s_diag.cwiseProduct(a)) / (n * linf));
  };
  if (n <= 16) {
    const size_t count = size_t{1} << n;
    Vector a(n);
    for (size_t mask = 0; mask < count; ++mask) {
      for (int i = 0; i < n; ++i) a[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      probe(a);
    }
  }
  Rng rng(seed);
  for (long s = 0; s < samples; ++s) probe(rng.gaussian_vector(n));

  if (maps.t_norm_bound > 1.0 + 1e-8)
    throw NumericalError("build_embedding: |T| exceeds 1 + 1e-8; solver accuracy insufficient");
  if (maps.s_norm_bound > 1.0 + 1e-8)
    throw NumericalError("build_embedding: |S| exceeds n(1 + 1e-8)");
  return maps;
}

}  // namespace lozvol
