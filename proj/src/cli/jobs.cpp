#include "kcontract/cli/jobs.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "kcontract/corpus.hpp"
#include "kcontract/errors.hpp"

namespace kcontract::cli {

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::SchemaError, where + ": " + what);
}

int get_int(const json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) schema(where, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > 1000000000LL) schema(where, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t get_seed(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    schema(where, "expected a non-negative integer seed");
  return j.get<std::uint64_t>();
}

double get_positive(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) schema(where, "expected a positive number");
  return v;
}

// ---------------------------------------------------------------------------------------
// Job model

struct TupleSource {
  enum class Kind { Inline, Corpus, Random } kind = Kind::Inline;
  json matrices;
  std::optional<double> comm_tol;
  std::string name;
  std::string cls;
  int d = 1;
  int p = 1;
  double scale = 0.5;
  std::uint64_t seed = 1;
};

struct MultiplierSpec {
  int points = 10;
  int sets = 20;
  std::uint64_t seed = 1;
  double radius = 0.9;
};

struct Perturbation {
  std::string target;
  int row = 0;
  int col = 0;
  double amount = 0.1;
};

struct Job {
  json raw;
  std::optional<json> kernel;
  std::optional<TupleSource> tuple;
  std::optional<int> N;
  Tolerances tol;
  std::vector<std::string> commands;
  std::optional<std::vector<std::string>> select;
  std::optional<std::string> inject_failure;
  std::optional<MultiplierSpec> multiplier;
  std::optional<Perturbation> perturb;
  std::uint64_t seed = 1;
  std::string seed_source = "default";
};

void parse_tolerances(const json& j, Tolerances& t) {
  const std::string where = "job.tolerances";
  if (!j.is_object()) schema(where, "expected an object");
  const std::vector<std::pair<const char*, double*>> fields = {
      {"iso_tol", &t.iso_tol},           {"pure_tau", &t.pure_tau},       {"mem_tol", &t.mem_tol},
      {"sep_tol", &t.sep_tol},           {"kin_tol", &t.kin_tol},         {"cond_tol", &t.cond_tol},
      {"angle_tol", &t.angle_tol},       {"identity_tol", &t.identity_tol}, {"roundtrip_tol", &t.roundtrip_tol},
      {"pointwise_tol", &t.pointwise_tol}, {"psd_tol", &t.psd_tol},      {"recip_tol", &t.recip_tol},
      {"comm_tol", &t.comm_tol},         {"series_tol", &t.series_tol}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "tail_aware") {
      if (!it->is_boolean()) schema(where + ".tail_aware", "expected a boolean");
      t.tail_aware = it->get<bool>();
      continue;
    }
    auto f = std::find_if(fields.begin(), fields.end(), [&](const auto& e) { return it.key() == e.first; });
    if (f == fields.end()) schema(where, "unknown field '" + it.key() + "'");
    *f->second = get_positive(*it, where + "." + it.key());
  }
}

void scale_tolerances(Tolerances& t, double s) {
  for (double* v : {&t.iso_tol, &t.pure_tau, &t.mem_tol, &t.kin_tol, &t.cond_tol, &t.angle_tol, &t.identity_tol,
                    &t.roundtrip_tol, &t.pointwise_tol, &t.psd_tol, &t.recip_tol})
    *v *= s;
}

json tolerances_to_json(const Tolerances& t) {
  return json{{"iso_tol", t.iso_tol},           {"pure_tau", t.pure_tau},
              {"mem_tol", t.mem_tol},           {"sep_tol", t.sep_tol},
              {"kin_tol", t.kin_tol},           {"cond_tol", t.cond_tol},
              {"angle_tol", t.angle_tol},       {"identity_tol", t.identity_tol},
              {"roundtrip_tol", t.roundtrip_tol}, {"pointwise_tol", t.pointwise_tol},
              {"psd_tol", t.psd_tol},           {"recip_tol", t.recip_tol},
              {"comm_tol", t.comm_tol},         {"series_tol", t.series_tol},
              {"tail_aware", t.tail_aware}};
}

TupleSource parse_tuple(const json& j) {
  const std::string where = "job.tuple";
  require_keys(j, {"inline", "corpus", "random", "comm_tol"}, where);
  const int sources = static_cast<int>(j.contains("inline")) + static_cast<int>(j.contains("corpus")) +
                      static_cast<int>(j.contains("random"));
  if (sources != 1) schema(where, "exactly one of 'inline', 'corpus', 'random' is required");
  TupleSource t;
  if (j.contains("comm_tol")) t.comm_tol = get_positive(j["comm_tol"], where + ".comm_tol");
  if (j.contains("inline")) {
    t.kind = TupleSource::Kind::Inline;
    t.matrices = j["inline"];
    if (!t.matrices.is_array() || t.matrices.empty()) schema(where + ".inline", "expected a non-empty list of matrices");
  } else if (j.contains("corpus")) {
    t.kind = TupleSource::Kind::Corpus;
    if (!j["corpus"].is_string()) schema(where + ".corpus", "expected a name");
    t.name = j["corpus"].get<std::string>();
  } else {
    t.kind = TupleSource::Kind::Random;
    const json& r = j["random"];
    require_keys(r, {"class", "d", "p", "scale", "seed"}, where + ".random");
    if (!r.contains("class") || !r["class"].is_string()) schema(where + ".random", "missing 'class'");
    t.cls = r["class"].get<std::string>();
    if (r.contains("d")) t.d = get_int(r["d"], where + ".random.d", 1);
    if (r.contains("p")) t.p = get_int(r["p"], where + ".random.p", 1);
    if (r.contains("scale")) t.scale = get_positive(r["scale"], where + ".random.scale");
    if (r.contains("seed")) t.seed = get_seed(r["seed"], where + ".random.seed");
  }
  return t;
}

Job parse_job(const json& j, const RunOptions& opts) {
  require_keys(j, {"kernel", "family", "nu", "a", "tuple", "N", "tolerances", "commands", "corpus", "multiplier",
                   "seed", "perturb"},
               "job");
  Job job;
  job.raw = j;
  const bool shorthand = j.contains("family") || j.contains("nu") || j.contains("a");
  if (j.contains("kernel")) {
    if (shorthand) schema("job", "give the kernel either as 'kernel' or as top-level family/nu/a, not both");
    require_keys(j["kernel"], {"family", "nu", "a", "horizon", "name"}, "job.kernel");
    job.kernel = j["kernel"];
  } else if (shorthand) {
    json k = json::object();
    for (const char* key : {"family", "nu", "a"})
      if (j.contains(key)) k[key] = j[key];
    job.kernel = k;
  }
  if (job.kernel && job.kernel->contains("horizon")) get_int((*job.kernel)["horizon"], "job.kernel.horizon", 1);
  if (j.contains("tuple")) job.tuple = parse_tuple(j["tuple"]);
  if (j.contains("N")) job.N = get_int(j["N"], "job.N", 1);
  if (j.contains("tolerances")) parse_tolerances(j["tolerances"], job.tol);
  if (j.contains("commands")) {
    if (!j["commands"].is_array()) schema("job.commands", "expected a list of command names");
    for (const json& c : j["commands"]) {
      if (!c.is_string()) schema("job.commands", "expected strings");
      const std::string name = c.get<std::string>();
      const auto& all = command_names();
      if (name == "run" || std::find(all.begin(), all.end(), name) == all.end())
        schema("job.commands", "unknown command '" + name + "'");
      job.commands.push_back(name);
    }
  }
  if (j.contains("corpus")) {
    const json& c = j["corpus"];
    require_keys(c, {"select", "inject_failure"}, "job.corpus");
    if (c.contains("select")) {
      if (!c["select"].is_array()) schema("job.corpus.select", "expected a list of names or prefixes");
      std::vector<std::string> sel;
      for (const json& s : c["select"]) {
        if (!s.is_string()) schema("job.corpus.select", "expected strings");
        sel.push_back(s.get<std::string>());
      }
      job.select = sel;
    }
    if (c.contains("inject_failure")) {
      if (!c["inject_failure"].is_string()) schema("job.corpus.inject_failure", "expected an entry name");
      job.inject_failure = c["inject_failure"].get<std::string>();
    }
  }
  if (j.contains("seed")) {
    job.seed = get_seed(j["seed"], "job.seed");
    job.seed_source = "job";
  }
  if (j.contains("multiplier")) {
    const json& m = j["multiplier"];
    require_keys(m, {"points", "sets", "seed", "radius"}, "job.multiplier");
    MultiplierSpec spec;
    spec.seed = job.seed;
    if (m.contains("points")) spec.points = get_int(m["points"], "job.multiplier.points", 1);
    if (m.contains("sets")) spec.sets = get_int(m["sets"], "job.multiplier.sets", 1);
    if (m.contains("seed")) spec.seed = get_seed(m["seed"], "job.multiplier.seed");
    if (m.contains("radius")) {
      spec.radius = get_positive(m["radius"], "job.multiplier.radius");
      if (spec.radius >= 1.0) schema("job.multiplier.radius", "must lie in (0, 1)");
    }
    job.multiplier = spec;
  }
  if (j.contains("perturb")) {
    const json& p = j["perturb"];
    require_keys(p, {"target", "row", "col", "amount"}, "job.perturb");
    Perturbation pert;
    if (!p.contains("target") || !p["target"].is_string()) schema("job.perturb", "missing 'target'");
    pert.target = p["target"].get<std::string>();
    if (pert.target != "B" && pert.target != "C" && pert.target != "D")
      schema("job.perturb.target", "expected \"B\", \"C\" or \"D\"");
    if (p.contains("row")) pert.row = get_int(p["row"], "job.perturb.row", 0);
    if (p.contains("col")) pert.col = get_int(p["col"], "job.perturb.col", 0);
    if (p.contains("amount")) {
      if (!p["amount"].is_number()) schema("job.perturb.amount", "expected a number");
      pert.amount = p["amount"].get<double>();
    }
    job.perturb = pert;
  }

  if (opts.seed_override) {
    job.seed = *opts.seed_override;
    job.seed_source = "env";
    if (job.tuple && job.tuple->kind == TupleSource::Kind::Random) job.tuple->seed = *opts.seed_override;
    if (job.multiplier) job.multiplier->seed = *opts.seed_override;
  }
  if (!(opts.tol_scale > 0.0) || !std::isfinite(opts.tol_scale))
    throw Error(ErrorKind::BadParameter, "--tol-scale must be a positive number");
  scale_tolerances(job.tol, opts.tol_scale);
  return job;
}

// ---------------------------------------------------------------------------------------
// Checks and the truncation policy

struct Checks {
  json list = json::array();
  bool ok = true;

  void add(const std::string& name, double value, double tolerance, const char* relation = "<=",
           json extra = json::object()) {
    const bool pass = std::string(relation) == "<=" ? value <= tolerance : value >= tolerance;
    json c{{"name", name}, {"value", value}, {"tolerance", tolerance}, {"relation", relation}, {"pass", pass}};
    for (auto it = extra.begin(); it != extra.end(); ++it) c[it.key()] = *it;
    list.push_back(std::move(c));
    ok = ok && pass;
  }
};

// Truncation-sensitive residuals are compared against max(tol, 10 tau) (Gram-type
// quantities) or max(tol, 10 sqrt(tau)) (pointwise values and angles), where tau is the
// pureness residual at degree N - 1.
struct TailPolicy {
  bool enabled = false;
  double tau = 0.0;
  int degree = 0;

  double quad(double tol) const { return enabled ? std::max(tol, 10.0 * tau) : tol; }
  double lin(double tol) const { return enabled ? std::max(tol, 10.0 * std::sqrt(tau)) : tol; }
  json to_json() const { return json{{"enabled", enabled}, {"tail", tau}, {"at_degree", degree}}; }
};

TailPolicy tail_policy(const DilationPack& pack, const Tolerances& tol) {
  TailPolicy t;
  t.enabled = tol.tail_aware;
  t.degree = std::max(pack.N - 1, 0);
  t.tau = pack.pureness.at(static_cast<std::size_t>(t.degree));
  return t;
}

// ---------------------------------------------------------------------------------------
// Kernel, tuple and truncation degree

constexpr int kCheckKernelHorizon = 32;

std::optional<CorpusEntry> entry_for_tuple(const Job& job) {
  if (job.tuple && job.tuple->kind == TupleSource::Kind::Corpus) return find_corpus_entry(job.tuple->name);
  return std::nullopt;
}

std::shared_ptr<const KernelSpec> job_kernel(const Job& job, const RunOptions& opts, int default_horizon,
                                             int min_horizon) {
  int horizon = default_horizon;
  bool explicit_horizon = false;
  if (job.kernel && job.kernel->contains("horizon")) {
    horizon = (*job.kernel)["horizon"].get<int>();
    explicit_horizon = true;
  }
  if (opts.horizon) {
    horizon = *opts.horizon;
    explicit_horizon = true;
  }
  if (horizon < 1) throw Error(ErrorKind::BadParameter, "kernel horizon must be at least 1");

  std::shared_ptr<const KernelSpec> k;
  if (job.kernel) {
    json spec = *job.kernel;
    spec.erase("horizon");
    if (spec.contains("a")) {
      if (!spec["a"].is_array() || spec["a"].empty()) schema("job.kernel.a", "expected a non-empty list");
      const int listed = static_cast<int>(spec["a"].size()) - 1;
      if (!explicit_horizon) horizon = listed;
      if (horizon < listed) {
        json cut = json::array();
        for (int n = 0; n <= horizon; ++n) cut.push_back(spec["a"][static_cast<std::size_t>(n)]);
        spec["a"] = cut;
      }
    } else if (!spec.contains("family")) {
      schema("job.kernel", "needs 'family' or coefficients 'a'");
    }
    spec["max_degree"] = horizon;
    k = std::make_shared<const KernelSpec>(kernel_from_json(spec));
  } else if (auto entry = entry_for_tuple(job)) {
    k = corpus_kernel(entry->kernel_key, horizon);
  } else {
    schema("job", "no kernel given");
  }
  if (k->max_degree < min_horizon) {
    std::ostringstream os;
    os << "kernel horizon " << k->max_degree << " is below the required " << min_horizon;
    throw Error(ErrorKind::HorizonTooShort, os.str());
  }
  return k;
}

OperatorTuple job_tuple(const Job& job) {
  if (!job.tuple) schema("job", "no tuple given");
  const TupleSource& t = *job.tuple;
  const double comm_tol = t.comm_tol.value_or(job.tol.comm_tol);
  switch (t.kind) {
    case TupleSource::Kind::Inline: {
      std::vector<Mat> ms;
      for (const json& m : t.matrices) ms.push_back(matrix_from_json(m));
      return OperatorTuple(std::move(ms), comm_tol);
    }
    case TupleSource::Kind::Corpus: {
      if (auto entry = find_corpus_entry(t.name)) return OperatorTuple(corpus_tuple(entry->tuple_name), comm_tol);
      const auto names = corpus_tuple_names();
      if (std::find(names.begin(), names.end(), t.name) == names.end())
        throw Error(ErrorKind::BadParameter, "unknown corpus tuple or entry '" + t.name + "'");
      return OperatorTuple(corpus_tuple(t.name), comm_tol);
    }
    case TupleSource::Kind::Random:
      return OperatorTuple(random_tuple(t.cls, t.d, t.p, t.scale, t.seed), comm_tol);
  }
  schema("job.tuple", "unsupported source");
}

DefectOptions defect_options(const Job& job) {
  DefectOptions d;
  d.series.series_tol = job.tol.series_tol;
  d.seed = job.seed;
  return d;
}

DilationOptions dilation_options(const Job& job) {
  DilationOptions o;
  o.defect = defect_options(job);
  o.series.series_tol = job.tol.series_tol;
  o.pure_tau = job.tol.pure_tau;
  o.iso_tol = job.tol.iso_tol;
  o.tail_aware = job.tol.tail_aware;
  o.mem_tol = job.tol.mem_tol;
  return o;
}

constexpr double kAutoTail = 1e-13;
constexpr int kAutoMinN = 4;

// Truncation degree from the job, or the smallest degree whose tail is below kAutoTail.
std::pair<int, std::string> truncation_degree(const Job& job, const OperatorTuple& T, const KernelSpec& k) {
  if (job.N) return {*job.N, "job"};
  const DefectResult def = defect_operator(T, k, defect_options(job));
  return {choose_truncation(T, k, def.defect_op, kAutoTail, kAutoMinN, k.max_degree - 3), "auto"};
}

// ---------------------------------------------------------------------------------------
// Command bodies

json check_kernel_body(const Job& job, const RunOptions& opts, Checks& checks) {
  int default_horizon = job.N.value_or(kCheckKernelHorizon);
  const auto k = job_kernel(job, opts, default_horizon, 1);
  json out;
  out["kernel"] = kernel_to_json(*k);
  json c = json::array();
  for (int n = 0; n <= k->max_degree; ++n) {
    if (k->c_exact)
      c.push_back(rational_to_string((*k->c_exact)[static_cast<std::size_t>(n)]));
    else
      c.push_back(k->c[static_cast<std::size_t>(n)]);
  }
  out["c"] = c;
  const auto res = reciprocal_residuals(*k);
  const double worst = *std::max_element(res.begin(), res.end());
  const bool exact = reciprocal_identity_exact(*k);
  out["reciprocal"] = json{{"exact_mode", k->exact()}, {"exact_identity", exact}, {"max_relative_residual", worst}};
  if (k->exact())
    checks.add("reciprocal_identity_exact", exact ? 0.0 : 1.0, 0.0);
  else
    checks.add("reciprocal_identity", worst, job.tol.recip_tol);

  const SignReport s = nevanlinna_sign_check(*k);
  auto opt = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
  out["sign_check"] = json{{"eventually_nonneg", s.eventually_nonneg}, {"eventually_nonpos", s.eventually_nonpos},
                           {"nonneg_pivot", opt(s.nonneg_pivot)},     {"nonpos_pivot", opt(s.nonpos_pivot)},
                           {"pivot_index", opt(s.pivot_index)},       {"horizon", s.horizon},
                           {"horizon_limited", true}};
  out["essential_normality"] = json{{"d", essential_normality_diagnostic(*k)}, {"first_index", 1},
                                    {"horizon", k->max_degree}, {"horizon_limited", true}};
  out["ratios"] = json{{"ratio_inf", k->ratio_inf}, {"ratio_sup", k->ratio_sup}, {"r_estimate", k->r_estimate},
                       {"horizon", k->max_degree}, {"horizon_limited", true}};
  checks.add("ratio_inf_positive", k->ratio_inf, 0.0, ">=");
  out["horizons"] = json{{"kernel", k->max_degree}};
  return out;
}

json analyze_tuple_body(const Job& job, const RunOptions& opts, Checks& checks) {
  const OperatorTuple T = job_tuple(job);
  const auto k = job_kernel(job, opts, kDefaultHorizon, 1);
  json out;
  out["tuple"] = tuple_to_json(T);
  checks.add("commutator_residual", T.commutator_residual(), T.comm_tol());
  DefectOptions dopts = defect_options(job);
  dopts.throw_not_positive = false;
  const DefectResult def = defect_operator(T, *k, dopts);
  out["defect"] = defect_to_json(def);
  checks.add("defect_min_eig", def.min_eig, -def.pos_tol, ">=");
  const auto res = pureness_residuals(T, *k, def.defect_op, k->max_degree);
  const PurenessVerdict v = pureness_verdict(res, job.tol.pure_tau);
  out["pureness"] = json{{"residuals", res},        {"final_residual", v.final_residual}, {"tau", v.tau},
                         {"monotone_tail", v.monotone_tail}, {"pure", v.pure},          {"horizon", v.horizon}};
  checks.add("pureness_residual", v.final_residual, job.tol.pure_tau, "<=", json{{"horizon", v.horizon}});
  checks.add("pureness_tail_nonincreasing", v.monotone_tail ? 0.0 : 1.0, 0.0);
  out["verdicts"] = json{{"k_contraction", def.is_contraction}, {"pure", v.pure}};
  out["horizons"] = json{{"kernel", k->max_degree}};
  return out;
}

void add_dilation_checks(const DilationPack& pack, const DilationPack& pack2, const TailPolicy& tail,
                         const Tolerances& tol, std::uint64_t seed, Checks& checks) {
  checks.add("isometry_residual", pack.isometry_residual, tail.quad(tol.iso_tol), "<=", json{{"N", pack.N}});
  double inter = 0.0;
  for (double r : pack.intertwining_residuals) inter = std::max(inter, r);
  checks.add("intertwining_residual", inter, tail.quad(tol.iso_tol), "<=",
             json{{"band", json::array({pack.band_lo, pack.band_hi})}});
  // non-growth from N to N + 2, up to a rounding floor
  checks.add("isometry_residual_nonincreasing", pack2.isometry_residual - pack.isometry_residual, 1e-12, "<=",
             json{{"at_N", pack.isometry_residual}, {"at_N_plus_2", pack2.isometry_residual}});
  const DilationChecks c = check_dilation(pack, 8, seed);
  checks.add("deltaT_invertibility_gap", c.deltaT_invertibility_gap, tol.identity_tol);
  checks.add("ttilde_contraction_defect", std::max(0.0, -c.ttilde_min_eig), tol.identity_tol);
  checks.add("ttilde_projection_residual", c.ttilde_projection_residual, tail.quad(tol.iso_tol));
  checks.add("julia_unitary_residual", c.unitary_residual, tol.identity_tol);
  checks.add("defect_star_residual", c.defect_star_residual, tol.identity_tol);
  checks.add("ttilde_intertwining_residual", c.ttilde_intertwining, tol.identity_tol);
  checks.add("adjoint_apply_residual", c.adjoint_apply_residual, tol.identity_tol);
  checks.add("cfz_residual", c.cfz_residual, tail.lin(tol.pointwise_tol));
  checks.add("admissible_defect_leak", c.tildeD_defect_leak, tol.identity_tol);
}

json dilation_details(const DilationPack& pack) {
  return json{{"N", pack.N},
              {"validated_band", json::array({pack.band_lo, pack.band_hi})},
              {"defect_dim", pack.defect.defect_dim},
              {"admissible_dim", static_cast<int>(pack.tildeD_basis.cols())},
              {"membership_singular_values", real_vector_to_json(pack.membership_singular_values)},
              {"membership_residual", pack.membership_residual},
              {"isometry_residual", pack.isometry_residual},
              {"intertwining_residuals", pack.intertwining_residuals},
              {"residual_by_degree", std::vector<double>(pack.pureness.begin(),
                                                         pack.pureness.begin() + std::min<std::size_t>(pack.pureness.size(), pack.N + 1))},
              {"deltaT_eigs", real_vector_to_json(pack.DeltaT_eigs)},
              {"deltaT_lower_bound", pack.DeltaT_lower_bound},
              {"deltaT_series_terms", pack.DeltaT_terms},
              {"deltaT_truncation_gap", pack.DeltaT_truncation_gap},
              {"pure", json{{"final_residual", pack.pure.final_residual}, {"tau", pack.pure.tau},
                            {"horizon", pack.pure.horizon}}}};
}

struct WanderingOutcome {
  WanderingResult w;
  WTResult wt;
};

WanderingOutcome add_wandering_checks(const DilationPack& pack, const TailPolicy& tail, const Tolerances& tol,
                                      Checks& checks, json& details) {
  WanderingOptions wo;
  wo.sep_tol = tail.enabled ? std::max(tol.sep_tol, std::sqrt(tail.tau)) : tol.sep_tol;
  WanderingOutcome out{wandering_subspace(pack, wo), build_WT(pack)};
  const WanderingChecks wc = check_wandering(pack, out.w.basis);
  checks.add("wandering_decomposition_residual", wc.decomposition_residual, tail.quad(tol.iso_tol));
  checks.add("wandering_defect_equation_residual", wc.defect_equation_residual, tail.quad(tol.iso_tol));
  checks.add("norm_identity_error", wc.norm_identity_error, tail.quad(tol.iso_tol));
  checks.add("wandering_dim_mismatch", std::abs(out.w.dim - out.wt.W.source_dim), 0.0, "<=",
             json{{"wandering_dim", out.w.dim}, {"admissible_dim", out.wt.W.source_dim}});
  const Mat gram = weighted_gram(pack.space, out.wt.columns, out.wt.columns);
  checks.add("WT_isometry_residual", gram.size() ? hermitian_norm(gram - Mat::Identity(gram.rows(), gram.cols())) : 0.0,
             tail.quad(tol.kin_tol));
  const RealVec sines = weighted_principal_sines(pack.space, out.wt.columns, out.w.basis);
  checks.add("WT_span_max_sine", sines.size() ? sines.maxCoeff() : 0.0, tail.lin(tol.angle_tol));
  const int shown = std::min<int>(static_cast<int>(out.w.ritz_values.size()), 2 * out.w.dim + 2);
  details["wandering"] = json{{"dim", out.w.dim},
                              {"separation_threshold", wo.sep_tol},
                              {"ritz_values", real_vector_to_json(out.w.ritz_values.head(shown))},
                              {"next_value", out.w.next_value},
                              {"rank_warning", out.w.rank_warning}};
  return out;
}

void apply_perturbation(RealizationQuadruple& q, const Perturbation& p) {
  Mat& m = p.target == "B" ? q.B : (p.target == "C" ? q.C : q.D);
  if (p.row >= m.rows() || p.col >= m.cols()) {
    std::ostringstream os;
    os << "perturbation entry (" << p.row << ", " << p.col << ") outside the " << m.rows() << " x " << m.cols()
       << " matrix " << p.target;
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
  m(p.row, p.col) += p.amount;
}

void add_realization_checks(const DilationPack& pack, const WTResult& wt, const TailPolicy& tail, const Job& job,
                            const std::optional<Perturbation>& perturb, Checks& checks, json& details,
                            bool verbose) {
  const Tolerances& tol = job.tol;
  RealizationQuadruple q = wt.quadruple;
  if (perturb) apply_perturbation(q, *perturb);
  ConditionOptions co;
  co.tol = tol.cond_tol;
  co.mem_tol = tol.mem_tol;
  co.defect = defect_options(job);
  co.series.series_tol = tol.series_tol;
  const ConditionReport cond = check_conditions(q, pack.kernel, pack.N, co);
  checks.add("K1_residual", cond.k1, tol.cond_tol);
  checks.add("K2_residual", cond.k2, tol.cond_tol);
  checks.add("K3_residual", cond.k3, tol.cond_tol);
  checks.add("K4_residual", cond.k4, tol.mem_tol, "<=", json{{"band", json::array({0, cond.band_hi})}});

  const InnerFunctionPoly W = build_W_from_quadruple(q, *pack.kernel, pack.N);
  double diff = 0.0;
  for (std::size_t i = 0; i < W.coeffs.size(); ++i) diff = std::max(diff, op_norm(W.coeffs[i] - wt.W.coeffs[i]));
  checks.add("roundtrip_coefficient_diff", diff, tol.roundtrip_tol);
  checks.add("pointwise_realization_error", pointwise_realization_error(W, q, *pack.kernel, 20, 0.5, job.seed),
             tail.lin(tol.pointwise_tol));

  // W is known through degree N, so the verifier works on that band; the orthogonality
  // residual pairs W with its own tail and is compared against the linear tolerance
  const int n_verify = std::max(pack.N, W.degree());
  const KInnerReport kin = verify_kinner(W, *pack.kernel, n_verify, tail.quad(tol.kin_tol));
  checks.add("kinner_isometry_residual", kin.isometry_residual, tail.quad(tol.kin_tol));
  checks.add("kinner_orthogonality_residual", kin.orthogonality_residual, tail.lin(tol.kin_tol), "<=",
             json{{"shift_band", json::array({kin.band_lo, kin.band_hi})}});
  checks.add("isometry_identity_residual", isometry_identity_residual(W, q.D, *pack.kernel), tail.quad(tol.iso_tol));

  if (job.multiplier) {
    const MultiplierSpec& m = *job.multiplier;
    MultiplierOptions mo;
    mo.psd_tol = tail.lin(tol.psd_tol);
    json sets = json::array();
    double worst = std::numeric_limits<double>::infinity();
    try {
      for (int s = 0; s < m.sets; ++s) {
        Rng rng(m.seed + static_cast<std::uint64_t>(s));
        std::vector<Vec> pts;
        for (int i = 0; i < m.points; ++i) pts.push_back(random_ball_point(pack.T.d(), m.radius, rng));
        const MultiplierReport r = da_multiplier_check(W, *pack.kernel, pts, mo);
        worst = std::min(worst, r.min_eig);
        sets.push_back(r.min_eig);
      }
      checks.add("multiplier_min_eig", worst, -mo.psd_tol, ">=",
                 json{{"points", m.points}, {"sets", m.sets}, {"seed", m.seed}, {"radius", m.radius}});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotRowContraction) throw;
      checks.add("multiplier_row_contraction", pack.kernel->ratio_sup, 1.0 + MultiplierOptions{}.row_tol, "<=",
                 json{{"reason", e.what()}});
    }
    details["multiplier"] = json{{"min_eig_by_set", sets}, {"seed", m.seed}, {"points", m.points}, {"radius", m.radius}};
  }

  details["conditions"] = conditions_to_json(cond);
  details["kinner"] = kinner_to_json(kin);
  details["perturbed"] = perturb.has_value();
  if (verbose) {
    details["quadruple"] = quadruple_to_json(q);
    details["W"] = inner_function_to_json(W);
  }
}

struct PackPair {
  DilationPack pack;
  DilationPack pack2;
};

PackPair build_packs(const OperatorTuple& T, std::shared_ptr<const KernelSpec> k, int N, const Job& job) {
  const DilationOptions o = dilation_options(job);
  return {canonical_dilation(T, k, N, o), canonical_dilation(T, k, N + 2, o)};
}

// Dilation, wandering and realization stages for one (tuple, kernel, N).
enum Stage { kDilate = 1, kWandering = 2, kRealize = 4 };

json analysis_body(const OperatorTuple& T, std::shared_ptr<const KernelSpec> k, int N, const std::string& N_source,
                   const Job& job, int stages, const std::optional<Perturbation>& perturb, bool verbose,
                   Checks& checks) {
  json out;
  const PackPair packs = build_packs(T, k, N, job);
  const DilationPack& pack = packs.pack;
  const TailPolicy tail = tail_policy(pack, job.tol);
  out["horizons"] = json{{"kernel", k->max_degree}, {"N", N}, {"N_source", N_source}, {"second_N", N + 2}};
  out["truncation_tail"] = tail.to_json();
  if (stages & kDilate) {
    add_dilation_checks(pack, packs.pack2, tail, job.tol, job.seed, checks);
    out["dilation"] = dilation_details(pack);
  }
  if (stages & (kWandering | kRealize)) {
    json wdetails;
    const WanderingOutcome wo = (stages & kWandering) ? add_wandering_checks(pack, tail, job.tol, checks, wdetails)
                                                      : WanderingOutcome{WanderingResult{}, build_WT(pack)};
    if (stages & kWandering) {
      out["wandering"] = wdetails["wandering"];
      if (verbose) out["dilation_report"] = dilation_report_to_json(pack, wo.w.dim, wo.wt.W);
    }
    if (stages & kRealize) {
      json rdetails;
      add_realization_checks(pack, wo.wt, tail, job, perturb, checks, rdetails, verbose);
      out["realization"] = rdetails;
    }
  }
  return out;
}

json tuple_command_body(const Job& job, const RunOptions& opts, int stages, Checks& checks) {
  const OperatorTuple T = job_tuple(job);
  const int min_horizon = job.N ? *job.N + 3 : kAutoMinN + 3;
  const auto k = job_kernel(job, opts, std::max(kDefaultHorizon, min_horizon), min_horizon);
  const auto [N, source] = truncation_degree(job, T, *k);
  json out = analysis_body(T, k, N, source, job, stages, stages & kRealize ? job.perturb : std::nullopt, true, checks);
  out["tuple"] = tuple_to_json(T);
  out["kernel"] = json{{"name", k->name}, {"family", std::string(to_string(k->family))}, {"horizon", k->max_degree}};
  return out;
}

// ---------------------------------------------------------------------------------------
// Corpus

bool selected(const std::string& name, const std::vector<std::string>& select) {
  for (const std::string& s : select)
    if (name == s || (name.size() > s.size() && name.compare(0, s.size(), s) == 0)) return true;
  return false;
}

json error_json(const Error& e) { return json{{"kind", std::string(to_string(e.kind())), }, {"message", e.what()}}; }

struct EntryResult {
  json report;
  int exit_code = 0;
};

EntryResult run_entry(const CorpusEntry& e, const Job& job, const RunOptions& opts) {
  EntryResult r;
  r.report = json{{"name", e.name}, {"kernel", e.kernel_key}, {"tuple", e.tuple_name}};
  try {
    const int horizon = opts.horizon.value_or(kDefaultHorizon);
    const auto k = corpus_kernel(e.kernel_key, horizon);
    const OperatorTuple T(corpus_tuple(e.tuple_name), job.tol.comm_tol);
    if (k->max_degree < (job.N ? *job.N : kAutoMinN) + 3)
      throw Error(ErrorKind::HorizonTooShort, "kernel horizon below N + 3");
    const auto [N, source] = truncation_degree(job, T, *k);
    std::optional<Perturbation> perturb;
    if (job.inject_failure && *job.inject_failure == e.name) perturb = job.perturb.value_or(Perturbation{"D", 0, 0, 0.1});
    Checks checks;
    json body = analysis_body(T, k, N, source, job, kDilate | kWandering | kRealize, perturb, false, checks);
    for (auto it = body.begin(); it != body.end(); ++it) r.report[it.key()] = *it;
    r.report["checks"] = checks.list;
    r.report["injected_failure"] = perturb.has_value();
    r.report["verdict"] = checks.ok ? "pass" : "fail";
    r.exit_code = checks.ok ? 0 : 2;
  } catch (const Error& err) {
    r.report["verdict"] = "error";
    r.report["error"] = error_json(err);
    r.exit_code = exit_code_for(err.kind());
  }
  return r;
}

int combine_exit(int a, int b) {
  // input errors dominate numerical ones, which dominate verdict failures
  auto rank = [](int c) { return c == 3 ? 3 : c == 4 ? 2 : c == 2 ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

json corpus_body(const Job& job, const RunOptions& opts, int& exit_code) {
  std::vector<CorpusEntry> entries;
  for (const CorpusEntry& e : full_corpus())
    if (!job.select || selected(e.name, *job.select)) entries.push_back(e);
  if (job.select)
    for (const std::string& s : *job.select) {
      const bool any = std::any_of(entries.begin(), entries.end(), [&](const CorpusEntry& e) { return selected(e.name, {s}); });
      if (!any) schema("job.corpus.select", "'" + s + "' matches no corpus entry");
    }
  if (job.inject_failure &&
      std::none_of(entries.begin(), entries.end(), [&](const CorpusEntry& e) { return e.name == *job.inject_failure; }))
    schema("job.corpus.inject_failure", "'" + *job.inject_failure + "' is not a selected corpus entry");

  std::vector<EntryResult> results(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) results[i] = run_entry(entries[i], job, opts);
  };
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  json list = json::array();
  int passed = 0, failed = 0, errors = 0;
  exit_code = 0;
  for (const EntryResult& r : results) {
    list.push_back(r.report);
    if (r.exit_code == 0)
      ++passed;
    else if (r.report["verdict"] == "fail")
      ++failed;
    else
      ++errors;
    exit_code = combine_exit(exit_code, r.exit_code);
  }
  return json{{"entries", list},
              {"summary", json{{"total", entries.size()}, {"passed", passed}, {"failed", failed}, {"errors", errors}}},
              {"horizons", json{{"kernel", opts.horizon.value_or(kDefaultHorizon)},
                                {"N", job.N ? json(*job.N) : json("auto")}}}};
}

// ---------------------------------------------------------------------------------------
// Command dispatch

json run_command(const std::string& command, const Job& job, const RunOptions& opts, int& exit_code) {
  json report{{"command", command}};
  try {
    Checks checks;
    json body;
    if (command == "check-kernel") {
      body = check_kernel_body(job, opts, checks);
    } else if (command == "analyze-tuple") {
      body = analyze_tuple_body(job, opts, checks);
    } else if (command == "dilate") {
      body = tuple_command_body(job, opts, kDilate, checks);
    } else if (command == "wandering") {
      body = tuple_command_body(job, opts, kWandering, checks);
    } else if (command == "realize") {
      body = tuple_command_body(job, opts, kRealize, checks);
    } else if (command == "corpus") {
      int code = 0;
      body = corpus_body(job, opts, code);
      for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = *it;
      report["verdict"] = code == 0 ? "pass" : (code == 2 ? "fail" : "error");
      report["exit_code"] = code;
      exit_code = code;
      return report;
    } else {
      throw Error(ErrorKind::BadParameter, "unknown command '" + command + "'");
    }
    for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = *it;
    report["checks"] = checks.list;
    report["verdict"] = checks.ok ? "pass" : "fail";
    exit_code = checks.ok ? 0 : 2;
  } catch (const Error& e) {
    report["verdict"] = "error";
    report["error"] = error_json(e);
    exit_code = exit_code_for(e.kind());
  }
  report["exit_code"] = exit_code;
  return report;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check-kernel", "analyze-tuple", "dilate", "wandering",
                                                 "realize",      "corpus",        "run"};
  return names;
}

Outcome execute(const std::string& command, const json& job_json, const RunOptions& opts) {
  Outcome out;
  json& rep = out.report;
  rep["tool"] = kToolName;
  rep["version"] = kToolVersion;
  rep["timestamp"] = opts.timestamp ? json(utc_timestamp()) : json(nullptr);
  rep["command"] = command;
  rep["job"] = job_json;
  try {
    const Job job = parse_job(job_json, opts);
    rep["seeds"] = json{{"base", job.seed}, {"source", job.seed_source}};
    if (job.tuple && job.tuple->kind == TupleSource::Kind::Random) rep["seeds"]["tuple"] = job.tuple->seed;
    if (job.multiplier) rep["seeds"]["multiplier"] = job.multiplier->seed;
    rep["tol_scale"] = opts.tol_scale;
    rep["tolerances"] = tolerances_to_json(job.tol);

    std::vector<std::string> commands;
    if (command == "run") {
      if (job.commands.empty()) schema("job.commands", "the run command needs a non-empty command list");
      commands = job.commands;
    } else {
      const auto& all = command_names();
      if (std::find(all.begin(), all.end(), command) == all.end())
        throw Error(ErrorKind::BadParameter, "unknown command '" + command + "'");
      commands = {command};
    }
    json results = json::array();
    int code = 0;
    for (const std::string& c : commands) {
      int c_code = 0;
      results.push_back(run_command(c, job, opts, c_code));
      code = combine_exit(code, c_code);
    }
    rep["results"] = results;
    out.exit_code = code;
    rep["verdict"] = code == 0 ? "pass" : (code == 2 ? "fail" : "error");
  } catch (const Error& e) {
    rep["verdict"] = "error";
    rep["error"] = error_json(e);
    out.exit_code = exit_code_for(e.kind());
  }
  rep["exit_code"] = out.exit_code;
  return out;
}

json load_job(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::SchemaError, "cannot read job file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, std::string("job file is not valid JSON: ") + e.what());
  }
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("KCONTRACT_SEED");
  if (!v || !*v) return std::nullopt;
  const std::string s(v);
  if (!std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch); }))
    throw Error(ErrorKind::BadParameter, "KCONTRACT_SEED must be a non-negative integer");
  return std::stoull(s);
}

}  // namespace kcontract::cli
