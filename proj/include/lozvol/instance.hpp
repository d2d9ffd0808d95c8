#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lozvol/common.hpp"
#include "lozvol/isotropy.hpp"
#include "lozvol/lozanovskii.hpp"
#include "lozvol/norm.hpp"
#include "lozvol/rng.hpp"
#include "lozvol/subspace.hpp"

namespace lozvol {

/// One pipeline input: a norm plus either a subspace basis or a quotient map.
struct Instance {
  UnconditionalNorm norm;
  std::optional<Matrix> subspace;  // rows are basis vectors of E
  std::optional<Matrix> quotient;  // k x n surjection
  uint64_t seed = 1;
  SubsetSelection::Method method = SubsetSelection::Method::Exact;
  long mc_samples = 200000;

  int n() const { return norm.dim(); }
  int k() const;
};

Instance parse_instance_json(const nlohmann::json& j);
Instance parse_instance(const std::string& path);
nlohmann::json instance_to_json(const Instance& inst);

enum class Stage { Lozanovskii, Enclose, Isotropy, Verify };

struct StageSet {
  bool lozanovskii = true;
  bool enclose = true;
  bool isotropy = true;
  bool verify = true;

  static StageSet all() { return {}; }
  static StageSet only_lozanovskii() { return {true, false, false, false}; }
};

struct Verdict {
  std::string name;
  bool pass = false;
  bool skipped = false;
  double lhs = 0.0, rhs = 0.0, margin = 0.0, min_constant = 0.0;
};

struct RunReport {
  nlohmann::json artifacts;  // per-stage payloads
  std::vector<Verdict> verdicts;
  std::string failed_stage;  // empty on success
  std::string error;
  double ratio = 0.0, bound = 0.0, l_constant = 0.0, max_section = 0.0;
  uint64_t seed = 0;
  int n = 0, k = 0;

  bool ok() const { return failed_stage.empty(); }
  bool all_pass() const;
  nlohmann::json to_json(bool with_timings = true) const;
};

RunReport run_pipeline(const Instance& inst, const StageSet& stages = StageSet::all());

struct SuiteOptions {
  int n_min = 2, n_max = 6;
  int k_min = 1, k_max = 3;
  int count = 10;
  uint64_t seed = 1;
  bool quotients = false;       // generate quotient maps instead of subspaces
  bool polytopal_only = false;  // restrict leaves to p in {1, inf}
};

std::vector<Instance> generate_suite(const SuiteOptions& opts);

/// Random norm from the grammar: leaves p in {1, 1.5, 2, 3, inf}, weights in
/// [0.5, 2], occasional two-level block structure.
UnconditionalNorm random_norm(int dim, Rng& rng, bool polytopal_only = false);

/// One CSV row per instance: n,k,ratio,bound,L_K,max_section,verdicts.
std::string suite_csv(const std::vector<RunReport>& reports);

/// Runs every instance through the pipeline in a work pool; report order
/// matches the instance order.
std::vector<RunReport> run_suite(const std::vector<Instance>& instances,
                                 const StageSet& stages = StageSet::all());

}  // namespace lozvol
