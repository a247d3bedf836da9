#pragma once

#include <functional>
#include <string>
#include <vector>

#include "clipsgd/verify.hpp"

namespace clipsgd::harness {

struct SuiteOptions {
  unsigned workers = 0;
};

/// One named entry of the verification suite.
struct SuiteCheck {
  std::string name;
  std::string description;
  /// Takes minutes rather than seconds; excluded unless requested.
  bool heavy = false;
  std::function<std::vector<CheckReport>(const SuiteOptions&)> run;
};

/// Registry in a fixed order.
const std::vector<SuiteCheck>& verification_suite();

/// Runs the named entry. Throws ConfigError for an unknown name.
std::vector<CheckReport> run_suite_check(const std::string& name, const SuiteOptions& options = {});

/// Median final gaps of tuned standard clipping on the synthetic quartic at
/// each horizon and the successive ratios.
struct RateScaling {
  std::vector<std::uint64_t> horizons;
  std::vector<double> tuned_lr;
  std::vector<double> median_gap;
  std::vector<double> ratios;
};

RateScaling synthetic_rate_scaling(const std::vector<std::uint64_t>& horizons,
                                   std::size_t seeds, unsigned workers = 0);

}  // namespace clipsgd::harness
