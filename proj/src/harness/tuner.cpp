#include "clipsgd/harness/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace clipsgd::harness {

namespace {

struct Key {
  double lr;
  double c;  // NaN-free: 0 when c is not tuned
  bool operator<(const Key& o) const { return std::tie(lr, c) < std::tie(o.lr, o.c); }
};

class Evaluator {
 public:
  Evaluator(const RunConfig& base, std::span<const std::uint64_t> seeds, bool tune_lr,
            bool tune_c, unsigned workers)
      : base_(base), seeds_(seeds), tune_lr_(tune_lr), tune_c_(tune_c), workers_(workers) {}

  const TuneCell& eval(int level, double lr, double c) {
    const Key key{tune_lr_ ? lr : 0.0, tune_c_ ? c : 0.0};
    if (auto it = index_.find(key); it != index_.end()) return cells_[it->second];
    RunConfig cfg = base_;
    if (tune_lr_) cfg.method.lr_scale = lr;
    if (tune_c_) cfg.method.threshold_override = c;
    EnsembleOptions opts;
    opts.workers = workers_;
    TuneCell cell;
    cell.level = level;
    cell.lr = cfg.method.lr_scale;
    if (tune_c_) cell.c = c;
    try {
      const EnsembleSummary s = run_ensemble(cfg, seeds_, opts);
      cell.median = s.median_final_gap;
      cell.q25 = s.q25_final_gap;
      cell.q75 = s.q75_final_gap;
      cell.failures = s.failures;
    } catch (const DomainError&) {
      cell.failures = seeds_.size();
    }
    if (std::isnan(cell.median)) cell.median = kInfinity;
    index_[key] = cells_.size();
    cells_.push_back(cell);
    return cells_.back();
  }

  std::vector<TuneCell>& cells() { return cells_; }

 private:
  RunConfig base_;
  std::span<const std::uint64_t> seeds_;
  bool tune_lr_, tune_c_;
  unsigned workers_;
  std::map<Key, std::size_t> index_;
  std::vector<TuneCell> cells_;
};

bool better(const TuneCell& a, const TuneCell& b) {
  if (a.median != b.median) return a.median < b.median;
  if (a.lr != b.lr) return a.lr < b.lr;
  return a.c.value_or(0.0) < b.c.value_or(0.0);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

bool threshold_is_tunable(Variant v) { return uses_clip_factor(v) || v == Variant::implicit; }

TuneResult tune(const RunConfig& base, std::span<const std::uint64_t> seeds,
                const TunerSpec& grid, unsigned workers) {
  const bool tune_lr = !grid.lr_values.empty();
  const bool tune_c = !grid.c_values.empty() && threshold_is_tunable(base.method.variant);
  TuneResult result;
  if (!grid.c_values.empty() && !tune_c) {
    result.notes.push_back("c grid ignored: the step of this method does not depend on c");
  }
  std::vector<double> lrs = tune_lr ? sorted_unique(grid.lr_values)
                                    : std::vector<double>{base.method.lr_scale};
  std::vector<double> cs = tune_c ? sorted_unique(grid.c_values) : std::vector<double>{0.0};

  Evaluator ev(base, seeds, tune_lr, tune_c, workers);
  auto best_of = [&](int level, const std::vector<double>& L, const std::vector<double>& C) {
    std::optional<TuneCell> best;
    for (double lr : L) {
      for (double c : C) {
        const TuneCell cell = ev.eval(level, lr, c);
        if (!best || better(cell, *best)) best = cell;
      }
    }
    return *best;
  };

  TuneCell winner = best_of(1, lrs, cs);
  if (lrs.size() * cs.size() == 1) {
    result.lr = winner.lr;
    result.c = winner.c;
    result.score = winner.median;
    result.cells = ev.cells();
    result.notes.push_back("single-cell grid");
    return result;
  }

  // Extend past an edge until the winner is interior or the budget is used.
  auto on_edge = [](const std::vector<double>& v, double x) {
    return v.size() > 1 && (x == v.front() || x == v.back());
  };
  while (true) {
    const bool lr_edge = tune_lr && on_edge(lrs, winner.lr);
    const bool c_edge = tune_c && on_edge(cs, winner.c.value_or(0.0));
    if (!std::isfinite(winner.median) || (!lr_edge && !c_edge)) break;
    if (result.extensions >= grid.max_extensions) {
      result.winner_on_edge = true;
      result.notes.push_back("first-level winner still on the grid edge after " +
                             std::to_string(result.extensions) + " extensions");
      break;
    }
    ++result.extensions;
    if (lr_edge) {
      if (winner.lr == lrs.front()) lrs.insert(lrs.begin(), lrs[0] * lrs[0] / lrs[1]);
      else lrs.push_back(lrs.back() * lrs.back() / lrs[lrs.size() - 2]);
    }
    if (c_edge) {
      if (*winner.c == cs.front()) cs.insert(cs.begin(), cs[0] * cs[0] / cs[1]);
      else cs.push_back(cs.back() * cs.back() / cs[cs.size() - 2]);
    }
    winner = best_of(1, lrs, cs);
  }
  if (!std::isfinite(winner.median)) {
    throw Error("tuning failed: every first-level cell diverged");
  }

  std::vector<double> lr2{winner.lr}, c2{winner.c.value_or(0.0)};
  if (tune_lr) {
    lr2.clear();
    for (double f : grid.refine) lr2.push_back(winner.lr * f);
  }
  if (tune_c) {
    c2.clear();
    for (double f : grid.refine) c2.push_back(*winner.c * f);
  }
  const TuneCell refined = best_of(2, sorted_unique(lr2), sorted_unique(c2));
  const TuneCell& final_cell = better(refined, winner) ? refined : winner;
  result.lr = final_cell.lr;
  result.c = final_cell.c;
  result.score = final_cell.median;
  result.cells = ev.cells();
  return result;
}

}  // namespace clipsgd::harness
