#include "lozvol/norm.hpp"

#include <algorithm>
#include <cmath>

#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

void require_finite(const Vector& v, const char* what) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

Vector gather(const Vector& v, const std::vector<int>& coords) {
  Vector out(static_cast<int>(coords.size()));
  for (size_t i = 0; i < coords.size(); ++i) out[static_cast<int>(i)] = v[coords[i]];
  return out;
}

}  // namespace

UnconditionalNorm UnconditionalNorm::lp(double p, Vector weights) {
  if (!(p >= 1.0)) throw InvalidInput("lp: p must be >= 1");
  if (weights.size() == 0) throw InvalidInput("lp: empty weights");
  for (int i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw InvalidInput("lp: weights must be positive and finite");
  }
  UnconditionalNorm n;
  n.kind_ = Kind::Lp;
  n.dim_ = static_cast<int>(weights.size());
  n.p_ = p;
  n.weights_ = std::move(weights);
  return n;
}

UnconditionalNorm UnconditionalNorm::lp_uniform(double p, int dim) {
  if (dim < 1) throw InvalidInput("lp_uniform: dim must be >= 1");
  return lp(p, Vector::Ones(dim));
}

UnconditionalNorm UnconditionalNorm::combine(Kind kind, std::vector<Block> blocks) {
  if (kind == Kind::Lp) throw InvalidInput("combine: kind must be max or sum");
  if (blocks.empty()) throw InvalidInput("combine: no blocks");
  int total = 0;
  for (const auto& b : blocks) {
    if (!b.norm) throw InvalidInput("combine: null block norm");
    if (static_cast<int>(b.coords.size()) != b.norm->dim())
      throw InvalidInput("combine: block norm dim != coords length");
    total += static_cast<int>(b.coords.size());
  }
  std::vector<char> seen(total, 0);
  for (const auto& b : blocks) {
    for (int c : b.coords) {
      if (c < 0 || c >= total) throw InvalidInput("combine: coordinate out of range");
      if (seen[c]) throw InvalidInput("combine: blocks must partition coordinates");
      seen[c] = 1;
    }
  }
  UnconditionalNorm n;
  n.kind_ = kind;
  n.dim_ = total;
  n.blocks_ = std::move(blocks);
  return n;
}

double UnconditionalNorm::eval(const Vector& v) const {
  if (static_cast<int>(v.size()) != dim_)
    throw InvalidInput("eval_norm: dimension mismatch");
  require_finite(v, "eval_norm");
  switch (kind_) {
    case Kind::Lp: {
      if (p_ == kInf) {
        double m = 0.0;
        for (int i = 0; i < dim_; ++i) m = std::max(m, weights_[i] * std::abs(v[i]));
        return m;
      }
      double m = 0.0;
      for (int i = 0; i < dim_; ++i) m = std::max(m, weights_[i] * std::abs(v[i]));
      if (m == 0.0) return 0.0;
      double s = 0.0;
      for (int i = 0; i < dim_; ++i)
        s += std::pow(weights_[i] * std::abs(v[i]) / m, p_);
      return m * std::pow(s, 1.0 / p_);
    }
    case Kind::Max: {
      double m = 0.0;
      for (const auto& b : blocks_) m = std::max(m, b.norm->eval(gather(v, b.coords)));
      return m;
    }
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& b : blocks_) s += b.norm->eval(gather(v, b.coords));
      return s;
    }
  }
  return 0.0;
}

UnconditionalNorm UnconditionalNorm::dual() const {
  switch (kind_) {
    case Kind::Lp: {
      // conjugate exponent, reciprocal weights
      double q;
      if (p_ == 1.0)
        q = kInf;
      else if (p_ == kInf)
        q = 1.0;
      else
        q = p_ / (p_ - 1.0);
      return lp(q, weights_.cwiseInverse());
    }
    case Kind::Max:
    case Kind::Sum: {
      std::vector<Block> dual_blocks;
      dual_blocks.reserve(blocks_.size());
      for (const auto& b : blocks_) {
        dual_blocks.push_back(
            {b.coords, std::make_shared<const UnconditionalNorm>(b.norm->dual())});
      }
      return combine(kind_ == Kind::Max ? Kind::Sum : Kind::Max, std::move(dual_blocks));
    }
  }
  throw NumericalError("dual: unreachable");
}

double UnconditionalNorm::eval_dual(const Vector& v) const {
  return dual().eval(v);
}

bool UnconditionalNorm::is_polytopal() const {
  if (kind_ == Kind::Lp) return p_ == 1.0 || p_ == kInf;
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [](const Block& b) { return b.norm->is_polytopal(); });
}

namespace {

constexpr size_t kVertexCap = 1u << 22;

void scatter_into(std::vector<Vector>& out, const std::vector<int>& coords,
                  const std::vector<Vector>& sub, int ambient_dim) {
  for (const auto& s : sub) {
    Vector v = Vector::Zero(ambient_dim);
    for (size_t i = 0; i < coords.size(); ++i) v[coords[i]] = s[static_cast<int>(i)];
    out.push_back(std::move(v));
  }
}

}  // namespace

std::vector<Vector> UnconditionalNorm::unit_ball_vertices() const {
  if (!is_polytopal())
    throw InvalidInput("unit_ball_vertices: norm is not polytopal");
  switch (kind_) {
    case Kind::Lp: {
      std::vector<Vector> out;
      if (p_ == 1.0) {
        out.reserve(2 * dim_);
        for (int i = 0; i < dim_; ++i) {
          Vector v = Vector::Zero(dim_);
          v[i] = 1.0 / weights_[i];
          out.push_back(v);
          out.push_back(-v);
        }
      } else {  // p == inf: all sign patterns of 1/w
        if (dim_ > 22) throw InvalidInput("unit_ball_vertices: enumeration too large");
        const size_t count = size_t{1} << dim_;
        out.reserve(count);
        for (size_t mask = 0; mask < count; ++mask) {
          Vector v(dim_);
          for (int i = 0; i < dim_; ++i)
            v[i] = ((mask >> i) & 1 ? 1.0 : -1.0) / weights_[i];
          out.push_back(std::move(v));
        }
      }
      return out;
    }
    case Kind::Sum: {
      // l1-type combination: extreme points are the embedded block extremes.
      std::vector<Vector> out;
      for (const auto& b : blocks_) {
        scatter_into(out, b.coords, b.norm->unit_ball_vertices(), dim_);
        if (out.size() > kVertexCap)
          throw InvalidInput("unit_ball_vertices: enumeration too large");
      }
      return out;
    }
    case Kind::Max: {
      // product ball: cartesian product of block extremes.
      std::vector<Vector> out{Vector::Zero(dim_)};
      for (const auto& b : blocks_) {
        const auto sub = b.norm->unit_ball_vertices();
        std::vector<Vector> next;
        next.reserve(out.size() * sub.size());
        if (out.size() * sub.size() > kVertexCap)
          throw InvalidInput("unit_ball_vertices: enumeration too large");
        for (const auto& base : out) {
          for (const auto& s : sub) {
            Vector v = base;
            for (size_t i = 0; i < b.coords.size(); ++i)
              v[b.coords[i]] = s[static_cast<int>(i)];
            next.push_back(std::move(v));
          }
        }
        out = std::move(next);
      }
      return out;
    }
  }
  throw NumericalError("unit_ball_vertices: unreachable");
}

std::vector<Vector> UnconditionalNorm::unit_ball_facet_normals() const {
  return dual().unit_ball_vertices();
}

double UnconditionalNorm::l2_lower_factor() const {
  switch (kind_) {
    case Kind::Lp: {
      const double wmin = weights_.minCoeff();
      if (p_ == kInf) return wmin / std::sqrt(static_cast<double>(dim_));
      if (p_ <= 2.0) return wmin;
      return wmin * std::pow(static_cast<double>(dim_), 1.0 / p_ - 0.5);
    }
    case Kind::Sum: {
      double m = kInf;
      for (const auto& b : blocks_) m = std::min(m, b.norm->l2_lower_factor());
      return m;
    }
    case Kind::Max: {
      double m = kInf;
      for (const auto& b : blocks_) m = std::min(m, b.norm->l2_lower_factor());
      return m / std::sqrt(static_cast<double>(blocks_.size()));
    }
  }
  return 0.0;
}

double UnconditionalNorm::l2_upper_factor() const {
  switch (kind_) {
    case Kind::Lp: {
      const double wmax = weights_.maxCoeff();
      if (p_ == kInf) return wmax;
      if (p_ >= 2.0) return wmax;
      return wmax * std::pow(static_cast<double>(dim_), 1.0 / p_ - 0.5);
    }
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& b : blocks_) s += std::pow(b.norm->l2_upper_factor(), 2);
      return std::sqrt(s);
    }
    case Kind::Max: {
      double m = 0.0;
      for (const auto& b : blocks_) m = std::max(m, b.norm->l2_upper_factor());
      return m;
    }
  }
  return 0.0;
}

nlohmann::json UnconditionalNorm::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::Lp: {
      j["kind"] = "lp";
      if (p_ == kInf)
        j["p"] = "inf";
      else
        j["p"] = p_;
      j["weights"] = std::vector<double>(weights_.data(), weights_.data() + dim_);
      break;
    }
    case Kind::Max:
    case Kind::Sum: {
      j["kind"] = kind_ == Kind::Max ? "max" : "sum";
      nlohmann::json blocks = nlohmann::json::array();
      for (const auto& b : blocks_) {
        nlohmann::json jb;
        jb["coords"] = b.coords;
        jb["norm"] = b.norm->to_json();
        blocks.push_back(std::move(jb));
      }
      j["blocks"] = std::move(blocks);
      break;
    }
  }
  return j;
}

namespace {

void reject_unknown_fields(const nlohmann::json& j,
                           std::initializer_list<const char*> allowed,
                           const char* context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok)
      throw InvalidInput(std::string(context) + ": unknown field \"" + it.key() + "\"");
  }
}

}  // namespace

UnconditionalNorm UnconditionalNorm::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw InvalidInput("norm: missing \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lp") {
    reject_unknown_fields(j, {"kind", "p", "weights"}, "norm(lp)");
    if (!j.contains("p")) throw InvalidInput("norm(lp): missing \"p\"");
    if (!j.contains("weights")) throw InvalidInput("norm(lp): missing \"weights\"");
    double p;
    if (j.at("p").is_string()) {
      if (j.at("p").get<std::string>() != "inf")
        throw InvalidInput("norm(lp): p must be a number or \"inf\"");
      p = kInf;
    } else {
      p = j.at("p").get<double>();
    }
    const auto w = j.at("weights").get<std::vector<double>>();
    Vector weights(static_cast<int>(w.size()));
    for (size_t i = 0; i < w.size(); ++i) weights[static_cast<int>(i)] = w[i];
    return lp(p, std::move(weights));
  }
  if (kind == "max" || kind == "sum") {
    reject_unknown_fields(j, {"kind", "blocks"}, "norm(block)");
    if (!j.contains("blocks")) throw InvalidInput("norm(block): missing \"blocks\"");
    std::vector<Block> blocks;
    for (const auto& jb : j.at("blocks")) {
      reject_unknown_fields(jb, {"coords", "norm"}, "norm block");
      if (!jb.contains("coords") || !jb.contains("norm"))
        throw InvalidInput("norm block: needs \"coords\" and \"norm\"");
      Block b;
      b.coords = jb.at("coords").get<std::vector<int>>();
      b.norm = std::make_shared<const UnconditionalNorm>(from_json(jb.at("norm")));
      if (b.norm->dim() != static_cast<int>(b.coords.size()))
        throw InvalidInput("norm block: weights.length != dim");
      blocks.push_back(std::move(b));
    }
    return combine(kind == "max" ? Kind::Max : Kind::Sum, std::move(blocks));
  }
  throw InvalidInput("norm: unknown kind \"" + kind + "\"");
}

std::string UnconditionalNorm::to_json_string() const { return to_json().dump(); }

UnconditionalNorm UnconditionalNorm::from_json_string(const std::string& text) {
  return from_json(nlohmann::json::parse(text));
}

double eval_norm(const UnconditionalNorm& norm, const Vector& v) {
  return norm.eval(v);
}

double eval_dual_norm(const UnconditionalNorm& norm, const Vector& v) {
  return norm.eval_dual(v);
}

std::vector<Vector> sample_unit_sphere(const UnconditionalNorm& norm, int count,
                                       uint64_t seed) {
  if (count < 1) throw InvalidInput("sample_unit_sphere: count must be >= 1");
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vector g;
    double n = 0.0;
    do {
      g = rng.gaussian_vector(norm.dim());
      n = norm.eval(g);
    } while (n < 1e-150);
    out.push_back(g / n);
  }
  return out;
}

UnconditionalityReport check_unconditionality(
    const std::function<double(const Vector&)>& oracle, int dim, int trials,
    uint64_t seed) {
  if (trials < 1) throw InvalidInput("check_unconditionality: trials must be >= 1");
  Rng rng(seed);
  UnconditionalityReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Vector a = rng.gaussian_vector(dim);
    Vector flipped = a;
    for (int i = 0; i < dim; ++i)
      if (rng.uniform() < 0.5) flipped[i] = -flipped[i];
    const double base = oracle(a);
    if (base <= 0.0) continue;
    const double dev = std::abs(oracle(flipped) - base) / base;
    report.max_relative_deviation = std::max(report.max_relative_deviation, dev);
  }
  report.pass = report.max_relative_deviation <= 1e-10;
  return report;
}

UnconditionalityReport check_unconditionality(const UnconditionalNorm& norm,
                                              int trials, uint64_t seed) {
  return check_unconditionality(
      [&norm](const Vector& v) { return norm.eval(v); }, norm.dim(), trials, seed);
}

SubspaceBasis::SubspaceBasis(int ambient_dim, int sub_dim, Matrix basis_columns)
    : n_(ambient_dim), k_(sub_dim), basis_(std::move(basis_columns)) {
  if (k_ < 1 || k_ > n_) throw InvalidInput("SubspaceBasis: need 1 <= k <= n");
  if (basis_.rows() != n_ || basis_.cols() != k_)
    throw InvalidInput("SubspaceBasis: basis must be n x k");
  Matrix normalized = basis_;
  for (int j = 0; j < k_; ++j) {
    const double len = normalized.col(j).norm();
    if (len <= 0.0 || !std::isfinite(len))
      throw InvalidInput("SubspaceBasis: zero or non-finite basis vector");
    normalized.col(j) /= len;
  }
  Eigen::JacobiSVD<Matrix> svd(normalized);
  if (svd.singularValues().minCoeff() <= 1e-10)
    throw InvalidInput("SubspaceBasis: basis is rank-deficient");

  // Fixed orthonormal frame: thin QR with positive diagonal of R.
  Eigen::HouseholderQR<Matrix> qr(basis_);
  frame_ = qr.householderQ() * Matrix::Identity(n_, k_);
  Matrix r = qr.matrixQR().topRows(k_).triangularView<Eigen::Upper>();
  for (int j = 0; j < k_; ++j)
    if (r(j, j) < 0.0) frame_.col(j) = -frame_.col(j);
}

}  // namespace lozvol
