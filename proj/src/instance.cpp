#include "lozvol/instance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lozvol/hull.hpp"
#include "lozvol/parallel.hpp"
#include "lozvol/rng.hpp"

namespace lozvol {

namespace {

nlohmann::json vec_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json mat_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

Matrix mat_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw InvalidInput(std::string(what) + ": expected a non-empty matrix");
  const auto first = j[0].get<std::vector<double>>();
  Matrix m(static_cast<int>(j.size()), static_cast<int>(first.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (row.size() != first.size())
      throw InvalidInput(std::string(what) + ": ragged matrix rows");
    for (size_t c = 0; c < row.size(); ++c)
      m(static_cast<int>(i), static_cast<int>(c)) = row[c];
  }
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int Instance::k() const {
  if (subspace) return static_cast<int>(subspace->rows());
  if (quotient) return static_cast<int>(quotient->rows());
  return 0;
}

Instance parse_instance_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key != "norm" && key != "subspace" && key != "quotient" && key != "seed" &&
        key != "method" && key != "mc_samples")
      throw InvalidInput("instance: unknown field \"" + key + "\"");
  }
  if (!j.contains("norm")) throw InvalidInput("instance: missing field \"norm\"");
  Instance inst{UnconditionalNorm::from_json(j.at("norm"))};
  const int n = inst.norm.dim();
  if (j.contains("subspace") == j.contains("quotient"))
    throw InvalidInput("instance: exactly one of \"subspace\"/\"quotient\" required");
  if (j.contains("subspace")) {
    Matrix rows = mat_from_json(j.at("subspace"), "subspace");
    if (static_cast<int>(rows.cols()) != n)
      throw InvalidInput("instance: subspace.cols != dim");
    if (rows.rows() > rows.cols())
      throw InvalidInput("instance: subspace has more vectors than dimensions");
    inst.subspace = rows;
    // Validate rank now so errors carry the field name.
    SubspaceBasis(n, static_cast<int>(rows.rows()), rows.transpose());
  } else {
    Matrix q = mat_from_json(j.at("quotient"), "quotient");
    if (static_cast<int>(q.cols()) != n)
      throw InvalidInput("instance: quotient.cols != dim");
    Eigen::JacobiSVD<Matrix> svd(q);
    if (q.rows() > q.cols() ||
        svd.singularValues()[q.rows() - 1] <= 1e-10 * std::max(1.0, svd.singularValues()[0]))
      throw InvalidInput("quotient not surjective");
    inst.quotient = q;
  }
  if (j.contains("seed")) inst.seed = j.at("seed").get<uint64_t>();
  if (j.contains("mc_samples")) inst.mc_samples = j.at("mc_samples").get<long>();
  if (j.contains("method")) {
    const std::string m = j.at("method").get<std::string>();
    if (m == "exact")
      inst.method = SubsetSelection::Method::Exact;
    else if (m == "greedy")
      inst.method = SubsetSelection::Method::Greedy;
    else
      throw InvalidInput("instance: method must be \"exact\" or \"greedy\"");
  }
  return inst;
}

Instance parse_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("parse_instance: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_instance_json(j);
}

nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["norm"] = inst.norm.to_json();
  if (inst.subspace) j["subspace"] = mat_to_json(*inst.subspace);
  if (inst.quotient) j["quotient"] = mat_to_json(*inst.quotient);
  j["seed"] = inst.seed;
  j["method"] = inst.method == SubsetSelection::Method::Exact ? "exact" : "greedy";
  j["mc_samples"] = inst.mc_samples;
  return j;
}

bool RunReport::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.skipped && !v.pass) return false;
  return ok();
}

nlohmann::json RunReport::to_json(bool with_timings) const {
  nlohmann::json j;
  j["n"] = n;
  j["k"] = k;
  j["seed"] = seed;
  j["version"] = "lozvol-1.0";
  nlohmann::json arts = artifacts;
  if (!with_timings && arts.contains("timings_ms")) arts.erase("timings_ms");
  j["artifacts"] = arts;
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : verdicts) {
    nlohmann::json jv;
    jv["name"] = v.name;
    jv["pass"] = v.pass;
    jv["skipped"] = v.skipped;
    jv["lhs"] = v.lhs;
    jv["rhs"] = v.rhs;
    jv["margin"] = v.margin;
    if (v.min_constant > 0.0) jv["min_constant"] = v.min_constant;
    vs.push_back(jv);
  }
  j["verdicts"] = vs;
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  j["summary"] = {{"ratio", ratio},
                  {"bound", bound},
                  {"l_constant", l_constant},
                  {"max_section", max_section}};
  return j;
}

RunReport run_pipeline(const Instance& inst, const StageSet& stages) {
  RunReport report;
  report.seed = inst.seed;
  report.n = inst.n();
  report.k = inst.k();
  nlohmann::json timings;
  auto timed = [&timings](const char* name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    timings[name] =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() / 1000.0;
  };
  const bool is_quotient = inst.quotient.has_value();
  std::string stage_name = "setup";
  try {
    if (is_quotient) {
      // Quotient path: Remark 1 construction + theorem 4.
      EncloseOptions eopts;
      eopts.method = inst.method;
      eopts.ball.mc_samples = inst.mc_samples;
      eopts.ball.seed = inst.seed ^ 0x51ull;
      eopts.seed = inst.seed ^ 0x52ull;
      QuotientCubeReport qr;
      stage_name = "enclose";
      if (stages.enclose) {
        timed("enclose", [&] { qr = quotient_cube(inst.norm, *inst.quotient, eopts); });
        report.ratio = qr.ratio;
        report.bound = qr.bound;
        report.artifacts["quotient_cube"] = {
            {"cube_map", mat_to_json(qr.cube_map)},
            {"cube_volume", qr.cube_volume},
            {"ball_volume", qr.ball_volume.value},
            {"ratio", qr.ratio},
            {"bound", qr.bound},
            {"containment",
             {{"samples", qr.containment.samples},
              {"violations", qr.containment.violations},
              {"max_gauge", qr.containment.max_gauge}}}};
        Verdict v;
        v.name = "remark1";
        v.lhs = qr.ratio_conservative;
        v.rhs = qr.bound;
        v.margin = qr.bound / std::max(qr.ratio_conservative, 1e-300);
        v.pass = qr.ratio_conservative <= qr.bound &&
                 qr.containment.max_gauge <= 1.0 + 1e-6;
        report.verdicts.push_back(v);
      }
      stage_name = "isotropy";
      if (stages.isotropy && inst.norm.is_polytopal() && inst.k() >= 1) {
        timed("isotropy", [&] {
          std::vector<Vector> image;
          for (const auto& vtx : inst.norm.unit_ball_vertices())
            image.push_back(*inst.quotient * vtx);
          ConvexHull hull = robust_hull(image, inst.k());
          std::vector<Vector> verts;
          for (int id : hull.vertex_indices()) {
            verts.push_back(hull.points()[id]);
            verts.push_back(-hull.points()[id]);
          }
          const IsotropicBody iso = to_isotropic(PolytopeV(inst.k(), verts));
          report.l_constant = iso.report.l_constant;
          report.artifacts["isotropy"] = {
              {"l_constant", iso.report.l_constant},
              {"cov_residual", iso.report.cov_residual},
              {"volume_check", iso.report.volume_check}};
          if (stages.verify) {
            const BoundCheckReport l3 = check_lemma3(iso.body, inst.seed ^ 0x53ull);
            Verdict v;
            v.name = "lemma3";
            v.lhs = l3.lhs;
            v.rhs = l3.rhs;
            v.margin = l3.margin;
            v.pass = l3.pass;
            report.verdicts.push_back(v);
          }
        });
      }
      stage_name = "verify";
      if (stages.verify) {
        timed("theorem4", [&] {
          CheckOptions copts;
          copts.mc_samples = inst.mc_samples;
          copts.seed = inst.seed ^ 0x54ull;
          const BoundCheckReport t4 = check_theorem4(inst.norm, *inst.quotient, 0.0, copts);
          report.max_section = t4.max_section;
          Verdict v;
          v.name = "theorem4";
          v.pass = t4.pass;
          v.skipped = t4.skipped;
          v.lhs = t4.lhs;
          v.rhs = t4.rhs;
          v.margin = t4.margin;
          v.min_constant = t4.min_constant;
          report.verdicts.push_back(v);
          report.artifacts["theorem4"] = {{"lhs", t4.lhs},
                                          {"rhs", t4.rhs},
                                          {"constant_used", t4.constant_used},
                                          {"min_constant", t4.min_constant}};
        });
      }
    } else {
      const SubspaceBasis subspace(inst.n(), inst.k(), inst.subspace->transpose());
      LozanovskiiCertificate cert;
      EmbeddingMaps maps;
      stage_name = "lozanovskii";
      if (stages.lozanovskii || stages.enclose || stages.verify) {
        timed("lozanovskii", [&] {
          cert = solve_weights(inst.norm);
          const CertificateReport cr =
              verify_certificate(inst.norm, cert, 2000, inst.seed ^ 0x61ull);
          report.artifacts["certificate"] = {
              {"weights", vec_to_json(cert.weights)},
              {"objective", cert.objective},
              {"norm_of_lambda", cert.norm_of_lambda},
              {"kkt_residual", cert.kkt_residual},
              {"iterations", cert.iterations},
              {"left_worst_ratio", cr.left_worst_ratio},
              {"right_worst_ratio", cr.right_worst_ratio}};
          Verdict v;
          v.name = "lemma1";
          v.pass = cr.pass;
          v.lhs = cr.left_worst_ratio;
          v.rhs = cr.right_worst_ratio;
          v.margin = cr.left_worst_ratio;
          report.verdicts.push_back(v);
        });
      }
      stage_name = "enclose";
      if (stages.enclose) {
        timed("enclose", [&] {
          maps = build_embedding(inst.norm, cert);
          const ProjectionFrame frame = embed_subspace(subspace, maps);
          EncloseOptions eopts;
          eopts.method = inst.method;
          eopts.ball.mc_samples = inst.mc_samples;
          eopts.ball.seed = inst.seed ^ 0x62ull;
          eopts.seed = inst.seed ^ 0x63ull;
          const SubsetSelection sel =
              select_max_det_subset(frame, inst.k(), inst.method, eopts.subset_cap);
          const EnclosingCrossPolytope poly =
              build_enclosing_polytope(inst.norm, subspace, maps, frame, sel, eopts);
          report.ratio = poly.ratio;
          report.bound = poly.bound;
          nlohmann::json verts = nlohmann::json::array();
          for (const auto& y : poly.vertices) verts.push_back(vec_to_json(y));
          report.artifacts["enclosing"] = {
              {"sigma", sel.sigma},
              {"abs_det", sel.abs_det},
              {"vertices", verts},
              {"absconv_volume", poly.absconv_volume},
              {"ball_volume", poly.ball_volume.value},
              {"ratio", poly.ratio},
              {"bound", poly.bound},
              {"containment",
               {{"samples", poly.containment.samples},
                {"violations", poly.containment.violations},
                {"max_gauge", poly.containment.max_gauge}}}};
          Verdict v2;
          v2.name = "theorem2";
          v2.lhs = poly.ratio_conservative;
          v2.rhs = poly.bound;
          v2.margin = poly.bound / std::max(poly.ratio_conservative, 1e-300);
          v2.pass = poly.ratio_conservative <= poly.bound &&
                    poly.containment.max_gauge <= 1.0 + 1e-6;
          report.verdicts.push_back(v2);

          BallVolumeOptions bopts;
          bopts.mc_samples = inst.mc_samples;
          bopts.seed = inst.seed ^ 0x64ull;
          const Lemma2Report l2 = check_lemma2(inst.norm, subspace, maps, bopts);
          Verdict vl2;
          vl2.name = "lemma2";
          vl2.lhs = l2.ratio_conservative;
          vl2.rhs = l2.bound;
          vl2.margin = l2.bound / std::max(l2.ratio_conservative, 1e-300);
          vl2.pass = l2.pass;
          report.verdicts.push_back(vl2);
          report.artifacts["lemma2"] = {{"ratio", l2.ratio}, {"bound", l2.bound}};
        });
      }
      stage_name = "isotropy";
      if (stages.isotropy) {
        timed("isotropy", [&] {
          if (inst.norm.is_polytopal()) {
            const PolytopeV ball = subspace_ball_polytope(inst.norm, subspace);
            const IsotropicBody iso = to_isotropic(ball);
            report.l_constant = iso.report.l_constant;
            report.artifacts["isotropy"] = {
                {"l_constant", iso.report.l_constant},
                {"cov_residual", iso.report.cov_residual},
                {"volume_check", iso.report.volume_check}};
            if (stages.verify) {
              const BoundCheckReport l3 = check_lemma3(iso.body, inst.seed ^ 0x65ull);
              Verdict v;
              v.name = "lemma3";
              v.lhs = l3.lhs;
              v.rhs = l3.rhs;
              v.margin = l3.margin;
              v.pass = l3.pass;
              report.verdicts.push_back(v);
            }
          } else {
            const IsotropyReport iso = to_isotropic_mc(
                subspace_ball_body(inst.norm, subspace),
                std::max<long>(inst.mc_samples, 10000), inst.seed ^ 0x66ull);
            report.l_constant = iso.l_constant;
            report.artifacts["isotropy"] = {{"l_constant", iso.l_constant},
                                            {"cov_residual", iso.cov_residual},
                                            {"volume_check", iso.volume_check},
                                            {"monte_carlo", true}};
          }
        });
      }
      stage_name = "verify";
      if (stages.verify) {
        timed("theorem3", [&] {
          CheckOptions copts;
          copts.mc_samples = inst.mc_samples;
          copts.seed = inst.seed ^ 0x67ull;
          const BoundCheckReport t3 = check_theorem3(inst.norm, subspace, copts);
          report.max_section = t3.max_section;
          Verdict v;
          v.name = "theorem3";
          v.pass = t3.pass;
          v.skipped = t3.skipped;
          v.lhs = t3.lhs;
          v.rhs = t3.rhs;
          v.margin = t3.margin;
          report.verdicts.push_back(v);
          report.artifacts["theorem3"] = {{"lhs", t3.lhs},
                                          {"rhs", t3.rhs},
                                          {"constant_used", t3.constant_used}};
        });
      }
    }
  } catch (const std::exception& e) {
    report.failed_stage = stage_name;
    report.error = e.what();
  }
  report.artifacts["timings_ms"] = timings;
  return report;
}

UnconditionalNorm random_norm(int dim, Rng& rng, bool polytopal_only) {
  const double ps_all[] = {1.0, 1.5, 2.0, 3.0, kInf};
  const double ps_poly[] = {1.0, kInf};
  auto random_p = [&]() {
    if (polytopal_only) return ps_poly[rng.uniform_int(0, 1)];
    return ps_all[rng.uniform_int(0, 4)];
  };
  auto random_leaf = [&](int d) {
    Vector w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.uniform(0.5, 2.0);
    return UnconditionalNorm::lp(random_p(), w);
  };
  if (dim < 4 || rng.uniform() < 0.5) return random_leaf(dim);
  // Two-block structure over a random permutation of the coordinates.
  std::vector<int> perm(dim);
  for (int i = 0; i < dim; ++i) perm[i] = i;
  for (int i = dim - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  const int split = rng.uniform_int(1, dim - 1);
  std::vector<UnconditionalNorm::Block> blocks(2);
  blocks[0].coords.assign(perm.begin(), perm.begin() + split);
  blocks[1].coords.assign(perm.begin() + split, perm.end());
  blocks[0].norm = std::make_shared<const UnconditionalNorm>(random_leaf(split));
  blocks[1].norm = std::make_shared<const UnconditionalNorm>(random_leaf(dim - split));
  const auto kind = rng.uniform() < 0.5 ? UnconditionalNorm::Kind::Max
                                        : UnconditionalNorm::Kind::Sum;
  return UnconditionalNorm::combine(kind, std::move(blocks));
}

std::vector<Instance> generate_suite(const SuiteOptions& opts) {
  std::vector<Instance> out;
  out.reserve(opts.count);
  Rng rng(opts.seed);
  for (int i = 0; i < opts.count; ++i) {
    const int n = rng.uniform_int(opts.n_min, opts.n_max);
    const int k = std::min(n, rng.uniform_int(opts.k_min, opts.k_max));
    Instance inst{random_norm(n, rng, opts.polytopal_only)};
    Matrix m(k, n);
    // Gaussian rows; resample on (numerically) dependent draws.
    for (;;) {
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = rng.gaussian();
      Eigen::JacobiSVD<Matrix> svd(m);
      if (svd.singularValues()[k - 1] > 1e-6 * svd.singularValues()[0]) break;
    }
    if (opts.quotients)
      inst.quotient = m;
    else
      inst.subspace = m;
    inst.seed = opts.seed * 1000003ull + static_cast<uint64_t>(i);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<RunReport> run_suite(const std::vector<Instance>& instances,
                                 const StageSet& stages) {
  std::vector<RunReport> reports(instances.size());
  parallel_for(static_cast<int>(instances.size()),
               [&](int i) { reports[i] = run_pipeline(instances[i], stages); });
  return reports;
}

std::string suite_csv(const std::vector<RunReport>& reports) {
  std::string csv = "n,k,ratio,bound,L_K,max_section,verdicts\n";
  for (const auto& r : reports) {
    csv += std::to_string(r.n) + "," + std::to_string(r.k) + "," +
           format_double(r.ratio) + "," + format_double(r.bound) + "," +
           format_double(r.l_constant) + "," + format_double(r.max_section) + ",";
    if (!r.ok()) {
      csv += "error:" + r.failed_stage;
    } else {
      bool first = true;
      for (const auto& v : r.verdicts) {
        if (!first) csv += ";";
        first = false;
        csv += v.name + "=" + (v.skipped ? "skip" : (v.pass ? "pass" : "fail"));
      }
    }
    csv += "\n";
  }
  return csv;
}

}  // namespace lozvol
