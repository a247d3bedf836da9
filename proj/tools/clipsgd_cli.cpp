// Command line front end: run, tune, verify, ingest, report, schema.
//
// Exit codes: 0 success, 1 a check or method failed, 2 configuration or
// input error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "clipsgd/harness/csv.hpp"
#include "clipsgd/harness/experiment.hpp"
#include "clipsgd/harness/ingest.hpp"
#include "clipsgd/harness/report.hpp"
#include "clipsgd/harness/suite.hpp"

namespace fs = std::filesystem;
using namespace clipsgd;
using namespace clipsgd::harness;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_check(const std::string& method, const CheckReport& r) {
  const char* tag = r.passed() ? "PASS" : r.failed() ? "FAIL" : "SKIP";
  std::cout << tag << "  " << r.name;
  if (method != "-") std::cout << " (" << method << ")";
  std::cout << "  " << r.details << "\n";
}

int cmd_run(const fs::path& spec_path, const std::string& out, unsigned workers) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  if (workers > 0) spec.workers = workers;
  std::optional<fs::path> dir;
  if (!out.empty()) dir = fs::path(out);
  const BundleResult b = run_experiment(spec, dir);
  for (const auto& m : b.methods) {
    if (m.ok) {
      std::cout << m.label << ": median final gap " << format_double(m.median_final_gap)
                << ", lr " << format_double(m.lr_scale) << ", c "
                << format_double(m.threshold.value_or(kInfinity)) << ", failed runs "
                << m.failures << "\n";
    } else {
      std::cout << m.label << ": error: " << m.error << "\n";
    }
  }
  for (const auto& c : b.checks) print_check(c.method, c.report);
  std::cout << "bundle written to " << b.directory.string() << "\n";
  return b.any_failed_check || b.any_failed_method ? kFailed : kOk;
}

int cmd_tune(const fs::path& spec_path, const std::string& label, const std::string& out,
             unsigned workers) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  if (workers > 0) spec.workers = workers;
  const MethodSpec* method = nullptr;
  for (const auto& m : spec.methods) {
    if (m.label == label) method = &m;
  }
  if (!method) throw ConfigError("no method labelled " + label + " in " + spec_path.string());
  const Problem problem = prepare_problem(spec);
  const TuneResult r = tune_method(spec, problem, *method);
  const std::string table = tuning_csv(r);
  if (out.empty()) {
    std::cout << table;
  } else {
    write_file_atomic(out, table);
  }
  std::cerr << "best lr " << format_double(r.lr);
  if (r.c) std::cerr << ", c " << format_double(*r.c);
  std::cerr << ", median final gap " << format_double(r.score) << "\n";
  for (const auto& n : r.notes) std::cerr << "note: " << n << "\n";
  return kOk;
}

int cmd_verify(const std::vector<std::string>& names, bool all, bool list, unsigned workers) {
  const auto& suite = verification_suite();
  if (list) {
    for (const auto& c : suite) {
      std::cout << c.name << (c.heavy ? " [heavy]" : "") << "  " << c.description << "\n";
    }
    return kOk;
  }
  std::vector<std::string> selected = names;
  if (selected.empty()) {
    for (const auto& c : suite) {
      if (all || !c.heavy) selected.push_back(c.name);
    }
  }
  SuiteOptions opts;
  opts.workers = workers;
  bool failed = false;
  for (const auto& name : selected) {
    for (const auto& r : run_suite_check(name, opts)) {
      print_check("-", r);
      failed = failed || r.failed();
    }
  }
  return failed ? kFailed : kOk;
}

int cmd_ingest(const fs::path& csv, const std::string& target, const std::string& out,
               std::uint64_t seed, bool no_shuffle, bool drop_first_level) {
  IngestOptions opts;
  opts.shuffle_seed = seed;
  opts.shuffle = !no_shuffle;
  opts.drop_first_level = drop_first_level;
  IngestReport rep;
  const RegressionData data = ingest_csv(csv, target, opts, &rep);
  const std::string text = regression_data_to_csv(data);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  std::cerr << "rows " << rep.rows_in << ", dropped " << rep.rows_dropped << " (missing target)"
            << ", features " << data.cols() - 1 << "\n";
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_report(const fs::path& dir) {
  for (const char* f : {"manifest.json", "summary.csv", "finals.csv", "checks.csv"}) {
    if (!fs::exists(dir / f)) throw ConfigError("not a bundle: missing " + (dir / f).string());
  }
  const std::vector<SeriesSummary> series = parse_summary_csv(read_text(dir / "summary.csv"));
  write_file_atomic(dir / "convergence.svg", convergence_svg(series, dir.filename().string()));
  std::cout << "method,oracle_calls,median_gap,q25_gap,q75_gap\n";
  for (const auto& s : series) {
    if (s.checkpoints.empty()) continue;
    const Checkpoint& c = s.checkpoints.back();
    std::cout << csv_escape(s.label) << "," << c.oracle_calls << "," << format_double(c.median)
              << "," << format_double(c.q25) << "," << format_double(c.q75) << "\n";
  }
  const CsvTable checks = read_csv(dir / "checks.csv");
  const std::size_t status = checks.column("status");
  bool failed = false;
  for (const auto& row : checks.rows) {
    failed = failed || (status < row.size() && row[status] && *row[status] == "fail");
  }
  return failed ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clipped SGD with double sampling: experiments and verification"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, "Concurrent runs (default: CLIPSGD_WORKERS or all cores)");

  std::string spec_path, out, method, csv_path, target, bundle;
  std::vector<std::string> checks;
  bool all = false, list = false, no_shuffle = false, drop_first = false;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run an experiment spec and write its bundle");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--out", out, "Bundle directory (default: the spec's output)");

  auto* tune = app.add_subcommand("tune", "Grid-search one method of a spec");
  tune->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  tune->add_option("--method", method, "Method label")->required();
  tune->add_option("--out", out, "Write the score table here instead of stdout");

  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--check", checks, "Check name (repeatable)");
  verify->add_flag("--all", all, "Include heavy checks");
  verify->add_flag("--list", list, "List checks and exit");

  auto* ingest = app.add_subcommand("ingest", "Preprocess a CSV for quartic regression");
  ingest->add_option("csv", csv_path, "Input CSV")->required();
  ingest->add_option("--target", target, "Target column")->required();
  ingest->add_option("--out", out, "Output CSV (default: stdout)");
  ingest->add_option("--seed", seed, "Shuffle seed");
  ingest->add_flag("--no-shuffle", no_shuffle, "Keep the row order");
  ingest->add_flag("--drop-first-level", drop_first, "k - 1 indicators per categorical column");

  auto* report = app.add_subcommand("report", "Summarise a bundle and redraw its plot");
  report->add_option("bundle", bundle, "Bundle directory")->required();

  auto* schema = app.add_subcommand("schema", "Print the JSON schema of spec files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(spec_path, out, workers);
    if (*tune) return cmd_tune(spec_path, method, out, workers);
    if (*verify) return cmd_verify(checks, all, list, workers);
    if (*ingest) return cmd_ingest(csv_path, target, out, seed, no_shuffle, drop_first);
    if (*report) return cmd_report(bundle);
    if (*schema) {
      std::cout << experiment_spec_schema();
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
