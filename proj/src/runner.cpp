#include "clipsgd/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace clipsgd {

const char* to_string(Sampling s) { return s == Sampling::double_sample ? "double" : "single"; }

Sampling parse_sampling(const std::string& name) {
  if (name == "double") return Sampling::double_sample;
  if (name == "single") return Sampling::single;
  throw ConfigError("unknown sampling mode: " + name);
}

const char* to_string(Averaging a) { return a == Averaging::t2_rule ? "t2_rule" : "all_iterates"; }

Averaging parse_averaging(const std::string& name) {
  if (name == "t2_rule") return Averaging::t2_rule;
  if (name == "all_iterates") return Averaging::all_iterates;
  throw ConfigError("unknown averaging rule: " + name);
}

Averaging RunConfig::effective_averaging() const {
  if (averaging) return *averaging;
  return is_plain(method.variant) ? Averaging::all_iterates : Averaging::t2_rule;
}

void RunConfig::validate() const {
  method.validate();
  if (!oracle) throw ConfigError("run: no oracle");
  if (x0.size() != oracle->objective().dimension()) {
    throw DimensionMismatch("run: x0 dimension does not match the objective");
  }
  if (T < 1) throw ConfigError("run: T must be >= 1");
  if (record_every < 1) throw ConfigError("run: record_every must be >= 1");
}

Vector average_output(std::span<const Vector> iterates, std::span<const std::uint64_t> t2,
                      const Vector& x0) {
  if (t2.empty()) return x0;
  std::vector<double> sum(x0.size(), 0.0);
  for (std::uint64_t t : t2) {
    if (t >= iterates.size()) throw DomainError("average_output: index out of range");
    const Vector& x = iterates[t];
    if (x.size() != sum.size()) throw DimensionMismatch("average_output: dimension mismatch");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += x[i];
  }
  const double inv = 1.0 / static_cast<double>(t2.size());
  for (double& v : sum) v *= inv;
  return Vector(std::move(sum));
}

RunTrace run(const RunConfig& config) {
  config.validate();
  const StepRule rule(config.method);
  const Objective& obj = config.oracle->objective();
  OraclePtr oracle = config.oracle->clone();
  oracle->reseed(config.seed);

  RunTrace tr;
  tr.method = to_string(config.method.variant);
  tr.seed = config.seed;
  tr.T = config.T;
  tr.threshold = rule.c();
  tr.averaging = config.effective_averaging();
  tr.sampling = config.sampling;
  tr.clipped.assign(config.T, false);
  tr.records.reserve(static_cast<std::size_t>(config.T / config.record_every + 1));
  if (config.keep_vectors) {
    tr.xs.reserve(config.T);
    tr.gs.reserve(config.T);
    tr.alphas.reserve(config.T);
    tr.etas.reserve(config.T);
  }

  const double R = config.method.scalars.R;
  const Vector& x_star = obj.x_star();
  const bool average_all = tr.averaging == Averaging::all_iterates;
  std::vector<double> avg_sum(config.x0.size(), 0.0);
  std::uint64_t avg_count = 0;
  StepState state;
  Vector x = config.x0;
  // Gap of the point returned if the run stopped now.
  auto running_output_gap = [&] {
    if (avg_count == 0) return obj.gap(config.x0);
    std::vector<double> mean(avg_sum);
    const double inv = 1.0 / static_cast<double>(avg_count);
    for (double& v : mean) v *= inv;
    return obj.gap(Vector(std::move(mean)));
  };

  for (std::uint64_t t = 0; t < config.T; ++t) {
    const std::uint64_t calls_before = oracle->calls();
    double gap = 0.0;
    Vector g_tilde, g;
    // x is finite here, but f or its gradient may overflow far from x*.
    try {
      gap = obj.gap(x);
      if (!std::isfinite(gap)) throw NonFiniteError("objective overflow");
      if (config.sampling == Sampling::double_sample) {
        auto pair = oracle->double_sample(x);
        g_tilde = std::move(pair.first);
        g = std::move(pair.second);
      } else {
        g_tilde = oracle->sample(x);
        g = g_tilde;
      }
    } catch (const NonFiniteError& e) {
      throw NonFiniteIterate(t, "non-finite objective or gradient at t = " + std::to_string(t) +
                                    " (" + e.what() + ")");
    }
    const double gt_norm = norm(g_tilde);
    const double g_norm = norm(g);
    const bool in_t1 = rule.clipped(gt_norm);
    const double alpha = rule.alpha(gt_norm);
    const double eta = rule.eta(gt_norm, alpha, g_norm, state);
    const double step = eta * alpha;

    tr.clipped[t] = in_t1;
    if (in_t1) {
      ++tr.T1_size;
      tr.clipped_progress.push_back(step * gap);
      tr.min_clipped_progress = std::min(tr.min_clipped_progress, step * gap);
    } else {
      ++tr.T2_size;
    }
    tr.sum_eta_alpha_delta += step * gap;
    tr.telescoping_lhs += alpha * (dot(g, x) - dot(g, x_star));
    tr.telescoping_sum_sq += alpha * alpha * g_norm * g_norm;

    if (t % config.record_every == 0) {
      tr.output_curve.push_back({t, calls_before, running_output_gap()});
    }
    if (average_all || !in_t1) {
      for (std::size_t i = 0; i < avg_sum.size(); ++i) avg_sum[i] += x[i];
      ++avg_count;
    }
    if (t % config.record_every == 0 || t + 1 == config.T) {
      TraceRecord rec;
      rec.t = t;
      rec.oracle_calls = calls_before;
      rec.f_gap = gap;
      rec.grad_norm = norm(obj.gradient(x));
      rec.g_tilde_norm = gt_norm;
      rec.eta_alpha = step;
      rec.clipped = in_t1;
      rec.dist_to_opt = distance(x, x_star);
      tr.records.push_back(rec);
    }
    if (config.keep_vectors) {
      tr.xs.push_back(x);
      tr.gs.push_back(g);
      tr.alphas.push_back(alpha);
      tr.etas.push_back(eta);
    }

    try {
      Vector next = x;
      next.axpy(-step, g);
      x = project_ball(next, config.x0, R);
    } catch (const NonFiniteError& e) {
      throw NonFiniteIterate(t + 1, "non-finite iterate at t = " + std::to_string(t + 1) +
                                        " (" + e.what() + ")");
    }
    if (std::isfinite(R)) {
      tr.max_dist_from_start = std::max(tr.max_dist_from_start, distance(x, config.x0));
    }
  }

  tr.oracle_calls = oracle->calls();
  tr.x_final = x;
  if (avg_count == 0) {
    tr.x_bar = config.x0;
  } else {
    const double inv = 1.0 / static_cast<double>(avg_count);
    for (double& v : avg_sum) v *= inv;
    tr.x_bar = Vector(std::move(avg_sum));
  }
  tr.final_gap = obj.gap(tr.x_bar);
  tr.output_curve.push_back({config.T, tr.oracle_calls, tr.final_gap});
  return tr;
}

unsigned default_workers() {
  if (const char* env = std::getenv("CLIPSGD_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  if (std::isinf(values[hi])) return values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

EnsembleSummary run_ensemble(const RunConfig& config, std::span<const std::uint64_t> seeds,
                             const EnsembleOptions& options) {
  if (seeds.empty()) throw ConfigError("run_ensemble: empty seed list");
  {
    std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("run_ensemble: seeds must be distinct");
    }
  }
  config.validate();

  EnsembleSummary summary;
  summary.method = to_string(config.method.variant);
  summary.runs.resize(seeds.size());

  std::vector<std::vector<double>> gaps(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      RunOutcome& out = summary.runs[i];
      out.seed = seeds[i];
      RunConfig cfg = config;
      cfg.seed = seeds[i];
      try {
        RunTrace tr = run(cfg);
        out.ok = true;
        out.final_gap = tr.final_gap;
        out.t2_fraction = static_cast<double>(tr.T2_size) / static_cast<double>(tr.T);
        out.sum_eta_alpha_delta = tr.sum_eta_alpha_delta;
        gaps[i].reserve(tr.output_curve.size());
        for (const auto& p : tr.output_curve) gaps[i].push_back(p.gap);
        if (options.keep_traces) out.trace = std::make_shared<RunTrace>(std::move(tr));
      } catch (const NonFiniteIterate& e) {
        out.error = "seed " + std::to_string(seeds[i]) + ": " + e.what();
        out.diverged_at = e.iteration();
      } catch (const Error& e) {
        out.error = "seed " + std::to_string(seeds[i]) + ": " + e.what();
      }
    }
  };
  const unsigned n_workers = std::max(
      1u, std::min<unsigned>(options.workers ? options.workers : default_workers(),
                             static_cast<unsigned>(seeds.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // The lowest-index failure is reported so the message does not depend on
  // scheduling.
  for (const auto& r : summary.runs) {
    if (!r.ok) {
      ++summary.failures;
      if (options.fail_fast) throw Error(r.error);
    }
  }

  std::vector<double> finals, fractions;
  for (const auto& r : summary.runs) {
    finals.push_back(r.ok ? r.final_gap : kInfinity);
    fractions.push_back(r.t2_fraction);
  }
  summary.median_final_gap = quantile(finals, 0.5);
  summary.q25_final_gap = quantile(finals, 0.25);
  summary.q75_final_gap = quantile(finals, 0.75);
  summary.median_t2_fraction = quantile(fractions, 0.5);

  // The checkpoint schedule depends only on T, record_every and the
  // sampling mode; failed runs contribute +inf at every checkpoint.
  const std::uint64_t per_iter = config.sampling == Sampling::double_sample ? 2 : 1;
  std::vector<double> column(seeds.size());
  std::size_t k = 0;
  for (std::uint64_t t = 0; t <= config.T; ++t) {
    if (t % config.record_every != 0 && t != config.T) continue;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      column[i] = summary.runs[i].ok ? gaps[i][k] : kInfinity;
    }
    Checkpoint cp;
    cp.t = t;
    cp.oracle_calls = t * per_iter;
    cp.median = quantile(column, 0.5);
    cp.q25 = quantile(column, 0.25);
    cp.q75 = quantile(column, 0.75);
    summary.checkpoints.push_back(cp);
    ++k;
  }
  return summary;
}

}  // namespace clipsgd
