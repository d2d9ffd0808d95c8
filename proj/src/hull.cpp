#include "lozvol/hull.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

// Factorials up to the supported hull dimension.
double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

ConvexHull::ConvexHull(std::vector<Vector> points, int dim, double rel_tol)
    : pts_(std::move(points)), d_(dim) {
  if (d_ < 1) throw InvalidInput("hull: dimension must be >= 1");
  if (pts_.empty()) throw InvalidInput("hull: no points");
  for (const auto& p : pts_) {
    if (static_cast<int>(p.size()) != d_)
      throw InvalidInput("hull: point dimension mismatch");
  }
  scale_ = 1e-30;
  for (const auto& p : pts_) scale_ = std::max(scale_, p.cwiseAbs().maxCoeff());
  tol_ = rel_tol * scale_ * d_;
  build();
}

bool ConvexHull::hyperplane(const std::vector<int>& ids, Vector& normal,
                            double& offset) const {
  // Plane through d points: normal spans the orthogonal complement of the
  // difference vectors. QR of the (d x (d-1)) difference matrix gives it.
  Matrix diff(d_, d_ - 1);
  for (int i = 1; i < d_; ++i) diff.col(i - 1) = pts_[ids[i]] - pts_[ids[0]];
  Eigen::HouseholderQR<Matrix> qr(diff);
  Matrix q = qr.householderQ() * Matrix::Identity(d_, d_);
  normal = q.col(d_ - 1);
  const double nn = normal.norm();
  if (!(nn > 0.5)) return false;  // Q column should be unit length
  normal /= nn;
  offset = normal.dot(pts_[ids[0]]);
  for (int i = 1; i < d_; ++i) {
    if (std::abs(normal.dot(pts_[ids[i]]) - offset) > 64.0 * tol_) return false;
  }
  return true;
}

void ConvexHull::build() {
  const int m = static_cast<int>(pts_.size());

  if (d_ == 1) {
    int lo = 0, hi = 0;
    for (int i = 1; i < m; ++i) {
      if (pts_[i][0] < pts_[lo][0]) lo = i;
      if (pts_[i][0] > pts_[hi][0]) hi = i;
    }
    full_dim_ = pts_[hi][0] - pts_[lo][0] > tol_;
    if (!full_dim_) return;
    interior_ = Vector::Constant(1, 0.5 * (pts_[lo][0] + pts_[hi][0]));
    HullFacet top;
    top.normal = Vector::Constant(1, 1.0);
    top.offset = pts_[hi][0];
    top.vertices = {hi};
    top.neighbors = {1};
    HullFacet bot;
    bot.normal = Vector::Constant(1, -1.0);
    bot.offset = -pts_[lo][0];
    bot.vertices = {lo};
    bot.neighbors = {0};
    facets_ = {top, bot};
    alive_ = {1, 1};
    live_ids_ = {0, 1};
    return;
  }

  // Initial simplex: greedily extend an affine basis by the point with the
  // largest orthogonal residual.
  std::vector<int> chosen;
  {
    int first = 0;
    for (int i = 1; i < m; ++i)
      if (pts_[i][0] < pts_[first][0]) first = i;
    chosen.push_back(first);
    Matrix basis(d_, 0);
    while (static_cast<int>(chosen.size()) < d_ + 1) {
      int best = -1;
      double best_res = tol_;
      Vector best_dir;
      for (int i = 0; i < m; ++i) {
        Vector r = pts_[i] - pts_[chosen[0]];
        if (basis.cols() > 0) r -= basis * (basis.transpose() * r);
        const double res = r.norm();
        if (res > best_res) {
          best_res = res;
          best = i;
          best_dir = r / res;
        }
      }
      if (best < 0) {
        full_dim_ = false;
        return;
      }
      chosen.push_back(best);
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = best_dir;
    }
  }
  full_dim_ = true;

  interior_ = Vector::Zero(d_);
  for (int id : chosen) interior_ += pts_[id];
  interior_ /= static_cast<double>(chosen.size());

  // d+1 facets of the simplex, each omitting one chosen vertex.
  facets_.clear();
  for (int omit = 0; omit < d_ + 1; ++omit) {
    HullFacet f;
    for (int i = 0; i < d_ + 1; ++i)
      if (i != omit) f.vertices.push_back(chosen[i]);
    if (!hyperplane(f.vertices, f.normal, f.offset))
      throw NumericalError("hull: degenerate initial simplex facet");
    if (f.normal.dot(interior_) > f.offset) {
      f.normal = -f.normal;
      f.offset = -f.offset;
    }
    if (f.offset - f.normal.dot(interior_) <= tol_)
      throw NumericalError("hull: interior reference too close to facet");
    f.neighbors.assign(d_, -1);
    facets_.push_back(std::move(f));
  }
  // Neighbor across the ridge omitting vertices[i] is the facet omitting that
  // vertex of the simplex.
  for (int fi = 0; fi < d_ + 1; ++fi) {
    auto& f = facets_[fi];
    for (int i = 0; i < d_; ++i) {
      const int v = f.vertices[i];
      for (int gi = 0; gi < d_ + 1; ++gi) {
        if (gi == fi) continue;
        if (std::find(facets_[gi].vertices.begin(), facets_[gi].vertices.end(), v) ==
            facets_[gi].vertices.end()) {
          f.neighbors[i] = gi;
          break;
        }
      }
    }
  }
  alive_.assign(facets_.size(), 1);

  // Conflict lists.
  std::vector<std::vector<int>> outside(facets_.size());
  std::vector<int> pending;
  {
    std::set<int> used(chosen.begin(), chosen.end());
    for (int i = 0; i < m; ++i) {
      if (used.count(i)) continue;
      for (size_t fi = 0; fi < facets_.size(); ++fi) {
        if (facets_[fi].normal.dot(pts_[i]) - facets_[fi].offset > tol_) {
          outside[fi].push_back(i);
          break;
        }
      }
    }
    for (size_t fi = 0; fi < facets_.size(); ++fi)
      if (!outside[fi].empty()) pending.push_back(static_cast<int>(fi));
  }

  std::vector<int> visible, stack;
  std::vector<char> visited;
  while (!pending.empty()) {
    const int start = pending.back();
    if (!alive_[start] || outside[start].empty()) {
      pending.pop_back();
      continue;
    }
    // Furthest conflict point of this facet.
    int p = -1;
    double best = -kInf;
    for (int cand : outside[start]) {
      const double dist = facets_[start].normal.dot(pts_[cand]) - facets_[start].offset;
      if (dist > best) {
        best = dist;
        p = cand;
      }
    }
    if (best <= tol_) {
      outside[start].clear();
      pending.pop_back();
      continue;
    }

    // Visible set via BFS over facet adjacency.
    visible.clear();
    stack.assign(1, start);
    visited.assign(facets_.size(), 0);
    visited[start] = 1;
    while (!stack.empty()) {
      const int fi = stack.back();
      stack.pop_back();
      if (facets_[fi].normal.dot(pts_[p]) - facets_[fi].offset > tol_) {
        visible.push_back(fi);
        for (int nb : facets_[fi].neighbors) {
          if (nb >= 0 && alive_[nb] && !visited[nb]) {
            visited[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
    }

    // Horizon ridges: (visible facet, ridge, hidden neighbor).
    struct Horizon {
      std::vector<int> ridge;
      int hidden;
      int hidden_slot;
    };
    std::vector<Horizon> horizon;
    std::vector<char> is_visible(facets_.size(), 0);
    for (int fi : visible) is_visible[fi] = 1;
    for (int fi : visible) {
      const auto& f = facets_[fi];
      for (int i = 0; i < d_; ++i) {
        const int nb = f.neighbors[i];
        if (nb < 0 || !alive_[nb] || is_visible[nb]) continue;
        Horizon h;
        for (int j = 0; j < d_; ++j)
          if (j != i) h.ridge.push_back(f.vertices[j]);
        h.hidden = nb;
        // Which neighbor slot of nb points back into the visible region?
        h.hidden_slot = -1;
        for (int j = 0; j < d_; ++j)
          if (facets_[nb].neighbors[j] == fi) h.hidden_slot = j;
        if (h.hidden_slot < 0) throw NumericalError("hull: broken adjacency");
        horizon.push_back(std::move(h));
      }
    }
    if (horizon.empty()) throw NumericalError("hull: empty horizon");

    // New facets: ridge + p.
    std::vector<int> fresh;
    std::map<std::vector<int>, std::pair<int, int>> ridge_map;  // ridge -> (facet, slot)
    for (const auto& h : horizon) {
      HullFacet f;
      f.vertices = h.ridge;
      f.vertices.push_back(p);
      if (!hyperplane(f.vertices, f.normal, f.offset))
        throw NumericalError("hull: degenerate facet");
      if (f.normal.dot(interior_) > f.offset) {
        f.normal = -f.normal;
        f.offset = -f.offset;
      }
      if (f.offset - f.normal.dot(interior_) <= 0.0)
        throw NumericalError("hull: interior point not below new facet");
      f.neighbors.assign(d_, -1);
      const int id = static_cast<int>(facets_.size());
      // Slot of the ridge shared with the hidden facet: the one omitting p,
      // i.e. the slot of vertex p... neighbors[i] is across the ridge
      // omitting vertices[i]; the ridge shared with hidden omits p which sits
      // at index d-1.
      f.neighbors[d_ - 1] = h.hidden;
      facets_.push_back(std::move(f));
      alive_.push_back(1);
      outside.emplace_back();
      facets_[h.hidden].neighbors[h.hidden_slot] = id;
      fresh.push_back(id);
      // Ridges containing p pair new facets with each other.
      for (int i = 0; i < d_ - 1; ++i) {
        std::vector<int> key;
        for (int j = 0; j < d_ - 1; ++j)
          if (j != i) key.push_back(facets_[id].vertices[j]);
        key.push_back(p);
        std::sort(key.begin(), key.end());
        auto it = ridge_map.find(key);
        if (it == ridge_map.end()) {
          ridge_map[key] = {id, i};
        } else {
          facets_[id].neighbors[i] = it->second.first;
          facets_[it->second.first].neighbors[it->second.second] = id;
          ridge_map.erase(it);
        }
      }
    }
    if (!ridge_map.empty()) throw NumericalError("hull: unmatched new ridges");

    // Reassign orphaned conflict points.
    for (int fi : visible) {
      for (int cand : outside[fi]) {
        if (cand == p) continue;
        for (int nf : fresh) {
          if (facets_[nf].normal.dot(pts_[cand]) - facets_[nf].offset > tol_) {
            outside[nf].push_back(cand);
            break;
          }
        }
      }
      outside[fi].clear();
      alive_[fi] = 0;
    }
    for (int nf : fresh)
      if (!outside[nf].empty()) pending.push_back(nf);
  }

  // Compact to live facets and remap neighbor ids.
  std::vector<int> remap(facets_.size(), -1);
  std::vector<HullFacet> compact;
  for (size_t i = 0; i < facets_.size(); ++i) {
    if (alive_[i]) {
      remap[i] = static_cast<int>(compact.size());
      compact.push_back(std::move(facets_[i]));
    }
  }
  if (compact.empty()) throw NumericalError("hull: no facets");
  for (auto& f : compact)
    for (int& nb : f.neighbors) nb = nb >= 0 ? remap[nb] : -1;
  facets_ = std::move(compact);
  alive_.assign(facets_.size(), 1);
  live_ids_.resize(facets_.size());
  std::iota(live_ids_.begin(), live_ids_.end(), 0);
}

const std::vector<HullFacet>& ConvexHull::facets() const {
  if (!full_dim_) throw NumericalError("hull: degenerate (not full-dimensional)");
  return facets_;
}

std::vector<int> ConvexHull::vertex_indices() const {
  if (!full_dim_) throw NumericalError("hull: degenerate (not full-dimensional)");
  std::set<int> ids;
  for (int fi : live_ids_)
    for (int v : facets_[fi].vertices) ids.insert(v);
  return std::vector<int>(ids.begin(), ids.end());
}

std::vector<MergedFacet> ConvexHull::merged_facets() const {
  if (!full_dim_) throw NumericalError("hull: degenerate (not full-dimensional)");
  // Union-find over ridge adjacency, merging coplanar neighbors.
  std::map<int, int> parent;
  for (int id : live_ids_) parent[id] = id;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const double merge_tol = 64.0 * tol_;
  for (int id : live_ids_) {
    const auto& f = facets_[id];
    for (int nb : f.neighbors) {
      if (nb < 0 || !alive_[nb]) continue;
      const auto& g = facets_[nb];
      if (f.normal.dot(g.normal) < 1.0 - 1e-9) continue;
      bool coplanar = true;
      for (int v : g.vertices) {
        if (std::abs(f.normal.dot(pts_[v]) - f.offset) > merge_tol) {
          coplanar = false;
          break;
        }
      }
      if (coplanar) parent[find(id)] = find(nb);
    }
  }
  std::map<int, MergedFacet> groups;
  std::map<int, std::set<int>> group_vertices;
  for (int id : live_ids_) {
    const int root = find(id);
    auto& mf = groups[root];
    if (mf.vertices.empty() && group_vertices[root].empty()) {
      mf.normal = facets_[id].normal;
      mf.offset = facets_[id].offset;
    }
    for (int v : facets_[id].vertices) group_vertices[root].insert(v);
  }
  std::vector<MergedFacet> out;
  out.reserve(groups.size());
  for (auto& [root, mf] : groups) {
    mf.vertices.assign(group_vertices[root].begin(), group_vertices[root].end());
    out.push_back(std::move(mf));
  }
  return out;
}

double ConvexHull::volume() const {
  if (!full_dim_) return 0.0;
  if (d_ == 1) {
    return facets_[live_ids_[0]].offset + facets_[live_ids_[1]].offset;
  }
  const double dfact = factorial(d_);
  double vol = 0.0;
  Matrix simplex(d_, d_);
  for (int fi : live_ids_) {
    const auto& f = facets_[fi];
    for (int i = 0; i < d_; ++i) simplex.col(i) = pts_[f.vertices[i]] - interior_;
    vol += std::abs(simplex.determinant()) / dfact;
  }
  return vol;
}

double ConvexHull::max_violation() const {
  if (!full_dim_) return 0.0;
  double worst = 0.0;
  for (int fi : live_ids_) {
    const auto& f = facets_[fi];
    for (const auto& p : pts_)
      worst = std::max(worst, f.normal.dot(p) - f.offset);
  }
  return worst;
}

ConvexHull robust_hull(const std::vector<Vector>& points, int dim) {
  try {
    return ConvexHull(points, dim);
  } catch (const NumericalError&) {
    // Joggle and retry; perturbation is far below every tolerance we certify.
    Rng rng(0x9e3779b97f4a7c15ull);
    double scale = 1e-30;
    for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    std::vector<Vector> jiggled = points;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const double mag = scale * 1e-12 * std::pow(10.0, attempt);
      for (auto& p : jiggled)
        for (int i = 0; i < dim; ++i) p[i] += mag * (rng.uniform() - 0.5);
      try {
        return ConvexHull(jiggled, dim, 1e-12 * std::pow(10.0, attempt));
      } catch (const NumericalError&) {
        continue;
      }
    }
    throw;
  }
}

}  // namespace lozvol
