#pragma once

#include <cstdint>
#include <vector>

#include "lozvol/common.hpp"
#include "lozvol/norm.hpp"

namespace lozvol {

/// Positive weights lambda with N(lambda) <= 1 maximizing sum(log lambda_i),
/// together with the residuals that make the construction checkable.
struct LozanovskiiCertificate {
  Vector weights;
  double objective = 0.0;       // sum log lambda_i
  double norm_of_lambda = 0.0;  // N(lambda), must be <= 1 + 1e-9
  double lower_residual = 0.0;  // worst sampled violation of the left inequality
  double kkt_residual = 0.0;    // max_i |n lambda_i g_i - 1|, g a subgradient of N
  int iterations = 0;
  std::vector<double> objective_history;  // filled when opts.record_history
};

struct SolveOptions {
  int max_iter = 10000;
  double kkt_tol = 1e-10;
  uint64_t seed = 1;
  bool record_history = false;
};

/// Thrown on non-convergence; carries the best iterate.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, LozanovskiiCertificate best)
      : NumericalError(what), best_iterate(std::move(best)) {}
  LozanovskiiCertificate best_iterate;
};

/// Projected gradient ascent on sum(log lambda) under N(lambda) <= 1 with
/// backtracking line search and radial projection lambda <- lambda/N(lambda).
LozanovskiiCertificate solve_weights(const UnconditionalNorm& norm,
                                     const SolveOptions& opts = {});

/// A subgradient of N at lambda > 0 chosen to balance lambda_i * g_i across
/// coordinates (the exact gradient wherever N is smooth). `activity_width`
/// is the relative window treated as active at max-type nonsmooth points;
/// widths much larger than machine rounding give a smoothed direction for
/// the ascent rather than a strict subgradient.
Vector balanced_subgradient(const UnconditionalNorm& norm, const Vector& lambda,
                            double activity_width = 1e-9, bool smooth = false);

struct CertificateReport {
  double left_worst_ratio = kInf;   // min over alpha of n*N(lambda∘alpha)/|alpha|_1
  double right_worst_ratio = 0.0;   // max over alpha of N(lambda∘alpha)/|alpha|_inf
  double norm_of_lambda = 0.0;
  long checked = 0;
  bool pass_left = false;
  bool pass_right = false;
  bool pass = false;
};

/// Checks both Lemma-style inequalities on `samples` random vectors plus the
/// 2^n sign vertices when n <= 16.
CertificateReport verify_certificate(const UnconditionalNorm& norm,
                                     const LozanovskiiCertificate& cert,
                                     long samples, uint64_t seed);

/// Diagonal factorization maps: T = diag(1/(n lambda_i)), S = diag(n lambda_i).
struct EmbeddingMaps {
  Vector t_diag;
  Vector s_diag;
  double t_norm_bound = 0.0;  // sampled sup |T a|_1 / N(a), must be <= 1 + 1e-8
  double s_norm_bound = 0.0;  // sampled sup N(S b) / (n |b|_inf), must be <= 1 + 1e-8
};

EmbeddingMaps build_embedding(const UnconditionalNorm& norm,
                              const LozanovskiiCertificate& cert,
                              long samples = 200, uint64_t seed = 7);

}  // namespace lozvol
