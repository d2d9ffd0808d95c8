// lozvol: construct certified enclosing cross-polytopes for subspaces of
// spaces with 1-unconditional basis and check the associated volume bounds.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "lozvol/instance.hpp"
#include "lozvol/isotropy.hpp"
#include "lozvol/lozanovskii.hpp"
#include "lozvol/norm.hpp"
#include "lozvol/subspace.hpp"
#include "lozvol/volume.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lozvol::InvalidInput("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_output(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
}

json vec_json(const lozvol::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

lozvol::Matrix rows_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw lozvol::InvalidInput(std::string(what) + ": expected matrix");
  const auto first = j[0].get<std::vector<double>>();
  lozvol::Matrix m(static_cast<int>(j.size()), static_cast<int>(first.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (row.size() != first.size())
      throw lozvol::InvalidInput(std::string(what) + ": ragged rows");
    for (size_t c = 0; c < row.size(); ++c)
      m(static_cast<int>(i), static_cast<int>(c)) = row[c];
  }
  return m;
}

// body.json: {"vrep": [[...]]} or {"hrep": [[...]]} or {"norm":..., "subspace":...}
struct BodySpec {
  std::optional<lozvol::PolytopeV> vrep;
  std::optional<lozvol::UnconditionalNorm> norm;
  std::optional<lozvol::Matrix> subspace_rows;
};

BodySpec parse_body(const json& j) {
  BodySpec spec;
  if (j.contains("vrep")) {
    const lozvol::Matrix m = rows_matrix(j.at("vrep"), "vrep");
    std::vector<lozvol::Vector> verts;
    for (int i = 0; i < m.rows(); ++i) verts.push_back(m.row(i).transpose());
    spec.vrep.emplace(static_cast<int>(m.cols()), std::move(verts));
  } else if (j.contains("hrep")) {
    const lozvol::Matrix m = rows_matrix(j.at("hrep"), "hrep");
    std::vector<lozvol::Vector> normals;
    for (int i = 0; i < m.rows(); ++i) normals.push_back(m.row(i).transpose());
    spec.vrep.emplace(lozvol::to_vrep(
        lozvol::PolytopeH(static_cast<int>(m.cols()), std::move(normals))));
  } else if (j.contains("norm")) {
    spec.norm = lozvol::UnconditionalNorm::from_json(j.at("norm"));
    if (j.contains("subspace")) spec.subspace_rows = rows_matrix(j.at("subspace"), "subspace");
  } else {
    throw lozvol::InvalidInput("body: expected \"vrep\", \"hrep\" or \"norm\"");
  }
  return spec;
}

int run(int argc, char** argv) {
  CLI::App app{"Lozanovskii factorization, enclosing cross-polytopes and "
               "hyperplane-bound checks for unconditional norms"};
  app.require_subcommand(1);

  // --- lozanovskii ---
  std::string norm_path, out_path;
  double tol = 1e-10;
  uint64_t seed = 1;
  auto* cmd_loz = app.add_subcommand("lozanovskii", "compute Lozanovskii weights");
  cmd_loz->add_option("--norm", norm_path, "norm JSON file")->required();
  cmd_loz->add_option("--tol", tol, "KKT tolerance");
  cmd_loz->add_option("--seed", seed, "sampling seed");
  cmd_loz->add_option("--out", out_path, "output JSON path");

  // --- enclose ---
  std::string sub_path, method = "exact";
  auto* cmd_enc = app.add_subcommand("enclose", "build the enclosing cross-polytope");
  cmd_enc->add_option("--norm", norm_path, "norm JSON file")->required();
  cmd_enc->add_option("--subspace", sub_path, "subspace JSON file")->required();
  cmd_enc->add_option("--method", method, "exact|greedy");
  cmd_enc->add_option("--out", out_path, "output JSON path");

  // --- volume ---
  std::string body_path;
  long mc_samples = 200000;
  auto* cmd_vol = app.add_subcommand("volume", "volume of a symmetric body");
  cmd_vol->add_option("--body", body_path, "body JSON file")->required();
  cmd_vol->add_option("--mc-samples", mc_samples, "Monte Carlo sample count");
  cmd_vol->add_option("--seed", seed, "Monte Carlo seed");
  cmd_vol->add_option("--out", out_path, "output JSON path");

  // --- isotropy ---
  auto* cmd_iso = app.add_subcommand("isotropy", "isotropic position and L_K");
  cmd_iso->add_option("--body", body_path, "body JSON file")->required();
  cmd_iso->add_option("--mc-samples", mc_samples, "Monte Carlo sample count");
  cmd_iso->add_option("--out", out_path, "output JSON path");

  // --- verify ---
  std::string theorem, inst_path;
  double constant = 0.0;
  auto* cmd_ver = app.add_subcommand("verify", "check a bound on an instance");
  cmd_ver->add_option("--theorem", theorem, "2|3|4|lemma3")->required();
  cmd_ver->add_option("--instance", inst_path, "instance JSON file")->required();
  cmd_ver->add_option("--constant", constant, "constant for theorem 4");
  cmd_ver->add_option("--out", out_path, "output JSON path");

  // --- suite ---
  int n_max = 6, k_max = 3, count = 10;
  bool quotients = false, polytopal = false;
  std::string csv_path;
  auto* cmd_suite = app.add_subcommand("suite", "random instance sweep");
  cmd_suite->add_option("--n-max", n_max, "max ambient dimension");
  cmd_suite->add_option("--k-max", k_max, "max subspace dimension");
  cmd_suite->add_option("--count", count, "number of instances");
  cmd_suite->add_option("--seed", seed, "suite seed");
  cmd_suite->add_flag("--quotients", quotients, "generate quotient instances");
  cmd_suite->add_flag("--polytopal", polytopal, "restrict leaves to p in {1, inf}");
  cmd_suite->add_option("--csv", csv_path, "CSV summary path");
  cmd_suite->add_option("--out", out_path, "full JSON report path");

  CLI11_PARSE(app, argc, argv);

  if (cmd_loz->parsed()) {
    const auto norm = lozvol::UnconditionalNorm::from_json(load_json(norm_path));
    lozvol::SolveOptions opts;
    opts.kkt_tol = tol;
    opts.seed = seed;
    const auto cert = lozvol::solve_weights(norm, opts);
    const auto report = lozvol::verify_certificate(norm, cert, 10000, seed);
    json j;
    j["weights"] = vec_json(cert.weights);
    j["objective"] = cert.objective;
    j["norm_of_lambda"] = cert.norm_of_lambda;
    j["kkt_residual"] = cert.kkt_residual;
    j["iterations"] = cert.iterations;
    j["left_worst_ratio"] = report.left_worst_ratio;
    j["right_worst_ratio"] = report.right_worst_ratio;
    j["pass"] = report.pass;
    write_output(j, out_path);
    return report.pass ? 0 : 2;
  }

  if (cmd_enc->parsed()) {
    json inst;
    inst["norm"] = load_json(norm_path);
    inst["subspace"] = load_json(sub_path).at("basis");
    inst["method"] = method;
    inst["seed"] = seed;
    const auto parsed = lozvol::parse_instance_json(inst);
    lozvol::StageSet stages;
    stages.isotropy = stages.verify = false;
    const auto report = lozvol::run_pipeline(parsed, stages);
    write_output(report.to_json(), out_path);
    if (!report.ok()) return 1;
    return report.all_pass() ? 0 : 2;
  }

  if (cmd_vol->parsed()) {
    const BodySpec body = parse_body(load_json(body_path));
    lozvol::VolumeEstimate est;
    if (body.vrep) {
      est = lozvol::volume_vrep(*body.vrep);
    } else {
      std::optional<lozvol::SubspaceBasis> sub;
      if (body.subspace_rows)
        sub.emplace(body.norm->dim(), static_cast<int>(body.subspace_rows->rows()),
                    body.subspace_rows->transpose());
      est = lozvol::ball_volume_mc(*body.norm, sub, mc_samples, seed);
      if (body.norm->is_polytopal() && sub)
        est = lozvol::subspace_ball_volume(*body.norm, *sub);
    }
    json j;
    j["value"] = est.value;
    j["std_error"] = est.std_error;
    j["method"] = est.method == lozvol::VolumeEstimate::Method::MonteCarlo
                      ? "monte-carlo"
                      : "exact-triangulation";
    write_output(j, out_path);
    return 0;
  }

  if (cmd_iso->parsed()) {
    const BodySpec body = parse_body(load_json(body_path));
    json j;
    if (body.vrep) {
      const auto iso = lozvol::to_isotropic(*body.vrep);
      j["l_constant"] = iso.report.l_constant;
      j["cov_residual"] = iso.report.cov_residual;
      j["volume_check"] = iso.report.volume_check;
      j["map"] = [&] {
        json rows = json::array();
        for (int r = 0; r < iso.report.map.rows(); ++r)
          rows.push_back(vec_json(iso.report.map.row(r).transpose()));
        return rows;
      }();
      j["monte_carlo"] = false;
    } else if (body.norm) {
      std::optional<lozvol::SubspaceBasis> sub;
      if (body.subspace_rows)
        sub.emplace(body.norm->dim(), static_cast<int>(body.subspace_rows->rows()),
                    body.subspace_rows->transpose());
      if (body.norm->is_polytopal()) {
        lozvol::PolytopeV ball =
            sub ? lozvol::subspace_ball_polytope(*body.norm, *sub)
                : lozvol::PolytopeV(body.norm->dim(), body.norm->unit_ball_vertices());
        const auto iso = lozvol::to_isotropic(ball);
        j["l_constant"] = iso.report.l_constant;
        j["cov_residual"] = iso.report.cov_residual;
        j["volume_check"] = iso.report.volume_check;
        j["monte_carlo"] = false;
      } else {
        lozvol::GaugeBody gauge_body =
            sub ? lozvol::subspace_ball_body(*body.norm, *sub)
                : lozvol::GaugeBody{
                      body.norm->dim(),
                      [n = *body.norm](const lozvol::Vector& x) { return n.eval(x); },
                      1.0 / body.norm->l2_lower_factor(),
                      1.0 / body.norm->l2_upper_factor()};
        const auto iso = lozvol::to_isotropic_mc(gauge_body, mc_samples, seed);
        j["l_constant"] = iso.l_constant;
        j["cov_residual"] = iso.cov_residual;
        j["volume_check"] = iso.volume_check;
        j["monte_carlo"] = true;
      }
    }
    write_output(j, out_path);
    return 0;
  }

  if (cmd_ver->parsed()) {
    const auto inst = lozvol::parse_instance(inst_path);
    json j;
    bool pass = false;
    if (theorem == "2") {
      lozvol::StageSet stages;
      stages.isotropy = false;
      stages.verify = false;
      const auto report = lozvol::run_pipeline(inst, stages);
      if (!report.ok()) throw lozvol::NumericalError(report.error);
      for (const auto& v : report.verdicts) {
        if (v.name == "theorem2" || v.name == "remark1") {
          j["lhs"] = v.lhs;
          j["rhs"] = v.rhs;
          j["margin"] = v.margin;
          pass = v.pass;
        }
      }
      j["name"] = "theorem2";
    } else if (theorem == "3") {
      if (!inst.subspace) throw lozvol::InvalidInput("verify 3: instance needs a subspace");
      const lozvol::SubspaceBasis sub(inst.n(), inst.k(), inst.subspace->transpose());
      lozvol::CheckOptions copts;
      copts.mc_samples = inst.mc_samples;
      copts.seed = inst.seed;
      const auto report = lozvol::check_theorem3(inst.norm, sub, copts);
      j = {{"name", report.name},    {"lhs", report.lhs},
           {"rhs", report.rhs},      {"margin", report.margin},
           {"skipped", report.skipped}, {"constant_used", report.constant_used}};
      pass = report.pass || report.skipped;
    } else if (theorem == "4") {
      if (!inst.quotient) throw lozvol::InvalidInput("verify 4: instance needs a quotient");
      lozvol::CheckOptions copts;
      copts.mc_samples = inst.mc_samples;
      copts.seed = inst.seed;
      const auto report = lozvol::check_theorem4(inst.norm, *inst.quotient, constant, copts);
      j = {{"name", report.name},          {"lhs", report.lhs},
           {"rhs", report.rhs},            {"margin", report.margin},
           {"skipped", report.skipped},    {"constant_used", report.constant_used},
           {"min_constant", report.min_constant}};
      pass = report.pass || report.skipped;
    } else if (theorem == "lemma3") {
      if (!inst.subspace) throw lozvol::InvalidInput("verify lemma3: instance needs a subspace");
      if (!inst.norm.is_polytopal())
        throw lozvol::InvalidInput("verify lemma3: exact path needs a polytopal norm");
      const lozvol::SubspaceBasis sub(inst.n(), inst.k(), inst.subspace->transpose());
      const auto ball = lozvol::subspace_ball_polytope(inst.norm, sub);
      const auto report = lozvol::check_lemma3(ball, inst.seed);
      j = {{"name", report.name},
           {"lhs", report.lhs},
           {"rhs", report.rhs},
           {"margin", report.margin},
           {"l_constant", report.l_constant}};
      pass = report.pass;
    } else {
      throw lozvol::InvalidInput("verify: theorem must be 2, 3, 4 or lemma3");
    }
    j["pass"] = pass;
    write_output(j, out_path);
    return pass ? 0 : 2;
  }

  if (cmd_suite->parsed()) {
    lozvol::SuiteOptions opts;
    opts.n_max = n_max;
    opts.k_max = k_max;
    opts.count = count;
    opts.seed = seed;
    opts.quotients = quotients;
    opts.polytopal_only = polytopal;
    const auto instances = lozvol::generate_suite(opts);
    const auto reports = lozvol::run_suite(instances);
    const std::string csv = lozvol::suite_csv(reports);
    if (!csv_path.empty()) {
      std::ofstream out(csv_path);
      out << csv;
    } else {
      std::cout << csv;
    }
    if (!out_path.empty()) {
      json all = json::array();
      for (const auto& r : reports) all.push_back(r.to_json());
      write_output(all, out_path);
    }
    bool any_fail = false, any_error = false;
    for (const auto& r : reports) {
      if (!r.ok()) any_error = true;
      if (!r.all_pass()) any_fail = true;
    }
    if (any_error) return 1;
    return any_fail ? 2 : 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
