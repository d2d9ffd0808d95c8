#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lozvol/common.hpp"

namespace lozvol {

/// A 1-unconditional norm on R^n, represented structurally: weighted-lp
/// leaves combined by max/sum over disjoint coordinate blocks. The
/// unconditional basis is the standard basis. Values are immutable after
/// construction and safe to share across threads.
class UnconditionalNorm {
 public:
  enum class Kind { Lp, Max, Sum };

  struct Block {
    std::vector<int> coords;  // 0-based ambient indices
    std::shared_ptr<const UnconditionalNorm> norm;
  };

  /// Weighted-lp leaf: N(a) = (sum (w_i |a_i|)^p)^(1/p), p in [1, inf].
  static UnconditionalNorm lp(double p, Vector weights);
  static UnconditionalNorm lp_uniform(double p, int dim);
  /// Max or sum combination of sub-norms on blocks partitioning {0..n-1}.
  static UnconditionalNorm combine(Kind kind, std::vector<Block> blocks);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double p() const { return p_; }
  const Vector& weights() const { return weights_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  double eval(const Vector& v) const;
  double eval_dual(const Vector& v) const;
  UnconditionalNorm dual() const;

  /// True when every leaf has p in {1, inf}; then the unit ball is a polytope.
  bool is_polytopal() const;
  /// Extreme points of the unit ball (polytopal norms only).
  std::vector<Vector> unit_ball_vertices() const;
  /// Facet normals a of {x : <a,x> <= 1}; equals the dual ball's vertices.
  std::vector<Vector> unit_ball_facet_normals() const;

  /// Factors m, M with m*|x|_2 <= N(x) <= M*|x|_2 for all x.
  double l2_lower_factor() const;
  double l2_upper_factor() const;

  nlohmann::json to_json() const;
  static UnconditionalNorm from_json(const nlohmann::json& j);
  std::string to_json_string() const;
  static UnconditionalNorm from_json_string(const std::string& text);

 private:
  UnconditionalNorm() = default;

  Kind kind_ = Kind::Lp;
  int dim_ = 0;
  double p_ = 2.0;
  Vector weights_;
  std::vector<Block> blocks_;
};

double eval_norm(const UnconditionalNorm& norm, const Vector& v);
double eval_dual_norm(const UnconditionalNorm& norm, const Vector& v);

/// `count` vectors of norm 1, directions drawn rotation-invariantly.
/// Deterministic for a fixed seed.
std::vector<Vector> sample_unit_sphere(const UnconditionalNorm& norm, int count,
                                       uint64_t seed);

struct UnconditionalityReport {
  int trials = 0;
  double max_relative_deviation = 0.0;
  bool pass = false;
};

UnconditionalityReport check_unconditionality(const UnconditionalNorm& norm,
                                              int trials, uint64_t seed);
/// Same check against an arbitrary evaluation oracle (used to reject
/// non-unconditional candidates in tests).
UnconditionalityReport check_unconditionality(
    const std::function<double(const Vector&)>& oracle, int dim, int trials,
    uint64_t seed);

/// k linearly independent vectors spanning a subspace E of R^n. Carries a
/// fixed orthonormal frame of E so that volumes in E share one Lebesgue
/// normalization.
class SubspaceBasis {
 public:
  /// `basis_columns` is n x k; throws if rank-deficient (singular values of
  /// the column-normalized matrix must exceed 1e-10).
  SubspaceBasis(int ambient_dim, int sub_dim, Matrix basis_columns);

  int ambient_dim() const { return n_; }
  int sub_dim() const { return k_; }
  const Matrix& basis() const { return basis_; }  // n x k
  const Matrix& frame() const { return frame_; }  // n x k, orthonormal columns

 private:
  int n_ = 0, k_ = 0;
  Matrix basis_;
  Matrix frame_;
};

}  // namespace lozvol
