#pragma once

// Declarative job files in, JSON verification reports out.
//
// A job is a JSON object with the fields
//   kernel     {family, nu, a, horizon}          (or family / nu / a at top level)
//   tuple      {inline: [matrices], comm_tol} | {corpus: name} | {random: {class, d, p, scale, seed}}
//   N          truncation degree (chosen from the truncation tail when absent)
//   tolerances overrides of the verdict tolerances, see `Tolerances`
//   commands   list used by the "run" command
//   corpus     {select: [names or prefixes], inject_failure: name}
//   multiplier {points, sets, seed, radius}
//   perturb    {target: "B" | "C" | "D", row, col, amount}
//   seed       base seed for sampled checks
// Unknown fields are rejected at every level.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcontract/json_io.hpp"

namespace kcontract::cli {

inline constexpr const char* kToolName = "kcontract";
inline constexpr const char* kToolVersion = "1.0.0";

struct Tolerances {
  double iso_tol = 1e-8;        // isometry and Gram-type residuals
  double pure_tau = 1e-8;       // pureness verdict
  double mem_tol = 1e-8;        // admissible-subspace membership and (K4)
  double sep_tol = 1e-10;       // wandering-subspace separation
  double kin_tol = 1e-8;        // K-inner verifier
  double cond_tol = 1e-8;       // (K1)-(K3)
  double angle_tol = 1e-6;      // principal-angle sines
  double identity_tol = 1e-10;  // exact algebraic identities (unitarity, intertwining)
  double roundtrip_tol = 1e-10; // coefficient agreement of the two W routes
  double pointwise_tol = 1e-8;  // pointwise series identities
  double psd_tol = 1e-8;        // multiplier positivity
  double recip_tol = 1e-12;     // float-mode reciprocal identity
  double comm_tol = 1e-10;      // commutativity of the input tuple
  double series_tol = 1e-14;    // series stopping rule
  bool tail_aware = true;       // widen truncation-sensitive tolerances by the observed tail
};

struct RunOptions {
  int threads = 1;
  double tol_scale = 1.0;
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed_override;
  bool timestamp = true;
};

struct Outcome {
  json report;
  int exit_code = 0;
};

/// check-kernel, analyze-tuple, dilate, wandering, realize, corpus, run.
const std::vector<std::string>& command_names();

/// Validates `job`, runs `command` and assembles the report. Never throws for job or
/// numerical problems; they are reported with the matching exit code.
Outcome execute(const std::string& command, const json& job, const RunOptions& opts);

/// Reads and parses a job file; throws SchemaError on unreadable or malformed input.
json load_job(const std::string& path);

/// KCONTRACT_SEED, when set to a non-negative integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace kcontract::cli
