#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clipsgd/core.hpp"
#include "clipsgd/methods.hpp"
#include "clipsgd/oracles.hpp"

namespace clipsgd {

enum class Sampling { double_sample, single };
enum class Averaging { t2_rule, all_iterates };

const char* to_string(Sampling s);
Sampling parse_sampling(const std::string& name);
const char* to_string(Averaging a);
Averaging parse_averaging(const std::string& name);

struct RunConfig {
  MethodConfig method;
  /// Prototype oracle; every run clones it and reseeds the clone.
  std::shared_ptr<const GradientOracle> oracle;
  Vector x0;
  /// Number of iterations. The step-size formulas use method.scalars.T,
  /// which normally equals this.
  std::uint64_t T = 1;
  Sampling sampling = Sampling::double_sample;
  /// Defaults to all_iterates for plain variants and t2_rule otherwise.
  std::optional<Averaging> averaging;
  std::uint64_t record_every = 1;
  std::uint64_t seed = 0;
  /// Keep x_t, g_t, alpha_t and eta_t for every t (trace replay checks).
  bool keep_vectors = false;

  Averaging effective_averaging() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// State of iteration t, recorded before the update.
struct TraceRecord {
  std::uint64_t t = 0;
  std::uint64_t oracle_calls = 0;  // calls made before iteration t
  double f_gap = 0.0;
  double grad_norm = 0.0;
  double g_tilde_norm = 0.0;
  double eta_alpha = 0.0;
  bool clipped = false;
  double dist_to_opt = 0.0;
};

/// Gap of the running output at iteration t: the average of the iterates
/// before t selected by the averaging rule, or x0 if there are none. The
/// point at t = T is the returned x_bar.
struct OutputPoint {
  std::uint64_t t = 0;
  std::uint64_t oracle_calls = 0;
  double gap = 0.0;
};

struct RunTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::uint64_t T = 0;
  double threshold = 0.0;
  Averaging averaging = Averaging::t2_rule;
  Sampling sampling = Sampling::double_sample;

  std::vector<TraceRecord> records;
  /// At t = 0, record_every, 2 record_every, ... below T, and at T.
  std::vector<OutputPoint> output_curve;
  /// clipped[t] is true iff t is in T1 (c <= |g_tilde_t|).
  std::vector<bool> clipped;
  std::uint64_t T1_size = 0;
  std::uint64_t T2_size = 0;
  std::uint64_t oracle_calls = 0;

  Vector x_bar;
  Vector x_final;
  double final_gap = 0.0;

  /// sum_t eta_t alpha_t Delta_t over all t.
  double sum_eta_alpha_delta = 0.0;
  /// eta_t alpha_t Delta_t for t in T1, in order, and its minimum (+inf
  /// if T1 is empty).
  std::vector<double> clipped_progress;
  double min_clipped_progress = kInfinity;
  /// sum_t alpha_t <g_t, x_t - x*> and sum_t alpha_t^2 |g_t|^2.
  double telescoping_lhs = 0.0;
  double telescoping_sum_sq = 0.0;
  /// max_t |x_t - x0|.
  double max_dist_from_start = 0.0;

  // Only with keep_vectors.
  std::vector<Vector> xs;
  std::vector<Vector> gs;
  std::vector<double> alphas;
  std::vector<double> etas;
};

/// Runs the method for config.T iterations with oracle seed config.seed.
/// Throws NonFiniteIterate if an iterate becomes non-finite.
RunTrace run(const RunConfig& config);

/// Mean of iterates[t] over t in T2, or x0 when T2 is empty.
Vector average_output(std::span<const Vector> iterates, std::span<const std::uint64_t> t2,
                      const Vector& x0);

struct RunOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  /// First non-finite iterate index when the run diverged.
  std::optional<std::uint64_t> diverged_at;
  double final_gap = kInfinity;
  double t2_fraction = 0.0;
  double sum_eta_alpha_delta = kInfinity;
  std::shared_ptr<const RunTrace> trace;  // with EnsembleOptions::keep_traces
};

/// Quantiles across seeds of the running-output gap (see OutputPoint).
struct Checkpoint {
  std::uint64_t t = 0;
  std::uint64_t oracle_calls = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct EnsembleSummary {
  std::string method;
  std::vector<RunOutcome> runs;  // in seed-list order
  std::vector<Checkpoint> checkpoints;
  double median_final_gap = kInfinity;
  double q25_final_gap = kInfinity;
  double q75_final_gap = kInfinity;
  double median_t2_fraction = 0.0;
  std::size_t failures = 0;
};

struct EnsembleOptions {
  /// 0 means: CLIPSGD_WORKERS if set, else hardware concurrency.
  unsigned workers = 0;
  bool keep_traces = false;
  /// Rethrow the first per-run error (prefixed with its seed).
  bool fail_fast = false;
};

unsigned default_workers();

/// One run per seed, executed concurrently. Failed runs count as +inf gap.
EnsembleSummary run_ensemble(const RunConfig& config, std::span<const std::uint64_t> seeds,
                             const EnsembleOptions& options = {});

/// Linear-interpolation quantile (q in [0,1]) of unsorted values.
double quantile(std::vector<double> values, double q);

}  // namespace clipsgd
