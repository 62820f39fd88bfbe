// kcontract: run verification jobs and write JSON reports.
//
//   kcontract <command> [--job job.json] [--out report.json] [--threads n] [--tol-scale s] [--horizon N]
//
// Commands: check-kernel, analyze-tuple, dilate, wandering, realize, corpus, run.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kcontract/cli/jobs.hpp"
#include "kcontract/errors.hpp"

namespace {

struct Flags {
  std::string job_path;
  std::string out_path;
  int threads = 1;
  double tol_scale = 1.0;
  int horizon = 0;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--job", f.job_path, "job file (JSON); an empty job is used when omitted");
  sub->add_option("--out", f.out_path, "report path; stdout when omitted");
  sub->add_option("--threads", f.threads, "worker threads for corpus runs")->check(CLI::Range(1, 1024));
  sub->add_option("--tol-scale", f.tol_scale, "multiplier applied to verdict tolerances")->check(CLI::PositiveNumber);
  sub->add_option("--horizon", f.horizon, "kernel coefficient horizon")->check(CLI::Range(1, 100000));
}

int write_report(const kcontract::cli::Outcome& outcome, const std::string& out_path) {
  const std::string text = outcome.report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return outcome.exit_code;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "kcontract: cannot write '" << out_path << "'\n";
    return kcontract::exit_code_for(kcontract::ErrorKind::BadParameter);
  }
  out << text;
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  namespace kc = kcontract::cli;
  CLI::App app{"Verification reports for unitarily invariant kernel contractions", "kcontract"};
  app.set_version_flag("--version", std::string(kc::kToolVersion));
  app.require_subcommand(1);
  Flags flags;
  for (const std::string& name : kc::command_names()) add_flags(app.add_subcommand(name), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kcontract::exit_code_for(kcontract::ErrorKind::SchemaError);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  kc::RunOptions opts;
  opts.threads = flags.threads;
  opts.tol_scale = flags.tol_scale;
  if (flags.horizon > 0) opts.horizon = flags.horizon;

  kc::Outcome outcome;
  try {
    opts.seed_override = kc::seed_from_env();
    const kcontract::json job = flags.job_path.empty() ? kcontract::json::object() : kc::load_job(flags.job_path);
    outcome = kc::execute(command, job, opts);
  } catch (const kcontract::Error& e) {
    // the job could not be read: still emit a report
    outcome.exit_code = kcontract::exit_code_for(e.kind());
    outcome.report = {{"tool", kc::kToolName},
                      {"version", kc::kToolVersion},
                      {"command", command},
                      {"verdict", "error"},
                      {"error", {{"kind", std::string(kcontract::to_string(e.kind()))}, {"message", e.what()}}},
                      {"exit_code", outcome.exit_code}};
  }
  return write_report(outcome, flags.out_path);
}
