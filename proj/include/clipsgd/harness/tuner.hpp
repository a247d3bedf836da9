#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clipsgd/harness/spec.hpp"
#include "clipsgd/runner.hpp"

namespace clipsgd::harness {

struct TuneCell {
  int level = 1;  // 1 = first-level grid, 2 = refinement
  double lr = 1.0;
  std::optional<double> c;
  double median = kInfinity;
  double q25 = kInfinity;
  double q75 = kInfinity;
  std::size_t failures = 0;
};

struct TuneResult {
  double lr = 1.0;
  std::optional<double> c;
  double score = kInfinity;
  /// Every evaluated cell in evaluation order.
  std::vector<TuneCell> cells;
  int extensions = 0;
  bool winner_on_edge = false;
  std::vector<std::string> notes;
};

/// Two-level grid search over lr_scale and the threshold c.
///
/// Every cell runs the ensemble over `seeds` and is scored by the median
/// final gap (diverged runs count as +inf). When the first-level winner
/// lies on the edge of a tuned dimension the grid is extended one
/// geometric step past that edge, up to max_extensions times in total.
/// The second level multiplies the winner by the refine factors in each
/// tuned dimension. Ties are broken by smaller lr, then smaller c, so the
/// result does not depend on evaluation order. A single-cell grid is
/// returned as is. Throws Error when every cell diverged.
///
/// The c grid is ignored for variants without a threshold-dependent step.
TuneResult tune(const RunConfig& base, std::span<const std::uint64_t> seeds,
                const TunerSpec& grid, unsigned workers = 0);

/// True if the variant's step depends on c (clipping and implicit rows).
bool threshold_is_tunable(Variant v);

}  // namespace clipsgd::harness
