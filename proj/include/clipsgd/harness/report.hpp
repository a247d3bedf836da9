#pragma once

#include <string>
#include <vector>

#include "clipsgd/harness/tuner.hpp"
#include "clipsgd/runner.hpp"
#include "clipsgd/verify.hpp"

namespace clipsgd::harness {

/// Column order of every per-seed trace file.
inline constexpr const char* kTraceHeader =
    "run_id,seed,method,t,oracle_calls,f_gap,grad_norm,g_tilde_norm,eta_alpha,clipped,dist_to_opt";

inline constexpr const char* kSummaryHeader = "method,t,oracle_calls,median_gap,q25_gap,q75_gap";

std::string trace_csv(const RunTrace& trace, std::uint64_t run_id, const std::string& label);

struct SeriesSummary {
  std::string label;
  std::vector<Checkpoint> checkpoints;
};

std::string summary_csv(const std::vector<SeriesSummary>& series);
/// Inverse of summary_csv.
std::vector<SeriesSummary> parse_summary_csv(const std::string& text);

/// Per-run final results of one method.
std::string finals_csv_rows(const std::string& label, const EnsembleSummary& summary,
                            bool with_header);

struct LabeledCheck {
  std::string method;  // "-" for checks not tied to a method
  CheckReport report;
};

std::string checks_csv(const std::vector<LabeledCheck>& checks);
std::string checks_json(const std::vector<LabeledCheck>& checks);

std::string tuning_csv(const TuneResult& result);

/// Self-contained SVG: log10 gap against oracle calls, one median line per
/// series with a shaded inter-quartile band, and a legend. Non-positive
/// values are drawn at the bottom of the axis.
std::string convergence_svg(const std::vector<SeriesSummary>& series, const std::string& title);

}  // namespace clipsgd::harness
