#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clipsgd/harness/report.hpp"
#include "clipsgd/harness/spec.hpp"
#include "clipsgd/harness/tuner.hpp"
#include "clipsgd/objectives.hpp"
#include "clipsgd/oracles.hpp"
#include "clipsgd/runner.hpp"

namespace clipsgd::harness {

/// Objective, oracle and starting point built from a spec.
struct Problem {
  ObjectivePtr objective;
  std::shared_ptr<const GradientOracle> oracle;
  NoiseModel noise;
  Vector x0;
  double R0 = 1.0;  // |x0 - x_star|
  BallRegion certify_region;
  std::vector<std::string> notes;
};

Problem prepare_problem(const ExperimentSpec& spec);

/// Run configuration for one method. `T` overrides the horizon used for
/// both the iteration count and the step-size formulas; with the
/// equal_oracle_calls budget single-sampling methods run twice as long.
RunConfig make_run_config(const ExperimentSpec& spec, const Problem& problem,
                          const MethodSpec& method, std::optional<std::uint64_t> T = {});

/// Tuner grid for a method: its own, else the spec default, else none.
std::optional<TunerSpec> tuner_for(const ExperimentSpec& spec, const MethodSpec& method);

/// Tunes one method and returns the result (throws on failure).
TuneResult tune_method(const ExperimentSpec& spec, const Problem& problem,
                       const MethodSpec& method);

struct MethodOutcome {
  std::string label;
  bool ok = false;
  std::string error;
  double lr_scale = 1.0;
  std::optional<double> threshold;
  double median_final_gap = kInfinity;
  std::size_t failures = 0;
};

struct BundleResult {
  std::filesystem::path directory;
  std::vector<MethodOutcome> methods;
  std::vector<LabeledCheck> checks;
  bool any_failed_check = false;
  bool any_failed_method = false;
};

/// Tunes (when grids are present), runs every method and writes the bundle:
///   manifest.json, summary.csv, finals.csv, convergence.svg,
///   checks.csv, checks.json, tuning/<label>.csv,
///   traces/<label>/seed_<seed>.csv
/// Files are written atomically and contain no timestamps, so a rerun of
/// the same spec reproduces them byte for byte. A failing method is
/// recorded in the manifest and the remaining methods still run.
BundleResult run_experiment(const ExperimentSpec& spec,
                            std::optional<std::filesystem::path> output = {});

}  // namespace clipsgd::harness
