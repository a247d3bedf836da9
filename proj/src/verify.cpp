#include "clipsgd/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace clipsgd {

namespace {

// Records lhs <= rhs with relative slack; returns true on violation.
bool record(CheckReport& r, double lhs, double rhs, double rel_slack) {
  ++r.trials;
  const double margin = rhs - lhs;
  r.worst_margin = std::min(r.worst_margin, margin);
  const bool bad = lhs > rhs + rel_slack * std::max(std::abs(lhs), std::abs(rhs));
  if (bad) ++r.violations;
  return bad;
}

void finish_count(CheckReport& r) {
  r.status = r.violations <= r.allowed_violations ? CheckStatus::pass : CheckStatus::fail;
  if (r.trials > 0) {
    r.observed_frequency =
        1.0 - static_cast<double>(r.violations) / static_cast<double>(r.trials);
  }
}

void finish_frequency(CheckReport& r, std::uint64_t successes) {
  r.observed_frequency =
      r.trials ? static_cast<double>(successes) / static_cast<double>(r.trials) : 1.0;
  r.violations = r.trials - successes;
  r.status = r.observed_frequency >= r.required_frequency ? CheckStatus::pass : CheckStatus::fail;
}

double log_uniform(RandomStream& s, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * s.uniform());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
  }
  return "?";
}

double monte_carlo_slack(double p, std::uint64_t n) {
  if (n == 0) return 0.0;
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

CheckReport check_smoothness_lemmas(const Objective& obj, const BallRegion& region,
                                    std::size_t samples, std::uint64_t seed, double rel_slack) {
  CheckReport r;
  r.name = "smoothness_lemmas";
  const double L0 = obj.L0();
  const double L1 = obj.L1();
  std::uint64_t def_bad = 0, sq_bad = 0, max_bad = 0;

  // x_star is only accurate to rounding; its gradient norm bounds the
  // error that inexactness adds to |grad f| in the gap-based lemmas.
  const double floor = norm(obj.gradient(obj.x_star()));

  auto evaluate = [&](const Vector& x) {
    const double g = norm(obj.gradient(x));
    const double gl = std::max(g - floor, 0.0);
    const double gap = obj.gap(x);
    const auto h = obj.hessian_norm(x);
    if (h && record(r, *h, L0 + L1 * g, rel_slack)) ++def_bad;
    if (record(r, gl * gl, 2.0 * (L0 + L1 * g) * gap, rel_slack)) ++sq_bad;
    if (L1 > 0.0 && record(r, gl, std::max(3.0 * L1 * gap, 6.0 * L0 / L1), rel_slack)) ++max_bad;
  };

  evaluate(region.center);
  if (distance(obj.x_star(), region.center) <= region.radius) evaluate(obj.x_star());
  RandomStream stream(seed, 0x5300);
  for (std::size_t i = 0; i < samples; ++i) evaluate(sample_in_ball(stream, region));

  finish_count(r);
  r.details = obj.name() + " L0=" + fmt(L0) + " L1=" + fmt(L1) +
              (floor > 0.0 ? " |grad f(x_star)|=" + fmt(floor) : std::string()) +
              "; violations: hessian=" + std::to_string(def_bad) +
              " grad_sq=" + std::to_string(sq_bad) + " grad_max=" + std::to_string(max_bad);
  return r;
}

CheckReport check_stepsize_hierarchy(std::size_t draws, std::uint64_t seed) {
  CheckReport r;
  r.name = "stepsize_hierarchy";
  RandomStream s(seed, 0x4800);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto T = static_cast<std::uint64_t>(log_uniform(s, 1e2, 1e9));
    const double delta = 0.001 + 0.498 * s.uniform();
    const double R0 = log_uniform(s, 1e-2, 1e2);
    const double L0 = log_uniform(s, 1e-3, 1e3);
    const double lp = log_plus(static_cast<double>(T) / delta);
    const double l1_max = std::sqrt(static_cast<double>(T) / (2.0 * lp)) / (64.0 * R0);
    const double L1 = l1_max * log_uniform(s, 1e-6, 1.0);
    const double sp = s.uniform() < 0.2 ? 0.0 : log_uniform(s, 1e-3, 1e3);
    MethodConfig std_cfg;
    std_cfg.variant = Variant::standard;
    std_cfg.scalars = Scalars{L0, L1, 0.0, delta, T, R0, kInfinity};
    std_cfg.sigma_prime = sp;
    const double c = threshold(std_cfg);
    const double n = s.uniform() < 0.1 ? 0.0 : c * log_uniform(s, 1e-3, 1e3);
    const HierarchyResult h = stepsize_hierarchy_check(L0, L1, sp, T, delta, R0, n);
    if (!h.precondition_met) continue;  // rounding at the boundary
    ++r.trials;
    const double margin = std::min(h.standard - h.conservative, h.implicit - h.standard);
    r.worst_margin = std::min(r.worst_margin, margin);
    if (!h.ordered) ++r.violations;
  }
  finish_count(r);
  r.details = std::to_string(r.trials) + " draws satisfying 2 log_+(T/delta)(64 L1 R0)^2 <= T";
  return r;
}

bool clipped_rate_condition(const Scalars& s) {
  const double k = 64.0 * s.L1 * s.R0;
  return static_cast<double>(s.T) >= log_plus(static_cast<double>(s.T) / s.delta) * k * k;
}

bool adaptive_rate_condition(const Scalars& s) {
  if (!std::isfinite(s.R)) return false;
  const double k = 15.0 * s.L1 * s.R;
  return clipped_rate_condition(s) && log_plus(1.0 / s.delta) * k * k <= static_cast<double>(s.T);
}

CheckReport check_progress_claim(const RunTrace& trace, const Scalars& scalars,
                                 double sigma_prime, double constant) {
  CheckReport r;
  r.name = "clipped_progress";
  if (!clipped_rate_condition(scalars)) {
    r.status = CheckStatus::skipped;
    r.details = "precondition unmet: T < log_+(T/delta)(64 L1 R0)^2";
    return r;
  }
  if (trace.threshold < 6.0 * sigma_prime) {
    r.status = CheckStatus::skipped;
    r.details = "precondition unmet: c < 6 sigma'";
    return r;
  }
  const double T = static_cast<double>(scalars.T);
  const double lp = log_plus(T / scalars.delta);
  const double bound = constant * lp * scalars.R0 * scalars.R0 / T;
  for (double p : trace.clipped_progress) record(r, bound, p, 0.0);
  finish_count(r);
  r.details = "bound " + fmt(bound) + " (constant " + fmt(constant) + "), |T1|=" +
              std::to_string(trace.T1_size) + ", min observed " +
              fmt(trace.min_clipped_progress) + ", bound with constant 8: " +
              fmt(2.0 * bound * 4.0 / constant);
  return r;
}

CheckReport check_progress_sum(const EnsembleSummary& summary, const Scalars& scalars,
                         double required) {
  CheckReport r;
  r.name = "progress_sum_bound";
  r.required_frequency = required;
  const double bound =
      2.0 * log_plus(static_cast<double>(scalars.T) / scalars.delta) * scalars.R0 * scalars.R0;
  std::uint64_t ok = 0;
  for (const auto& run : summary.runs) {
    ++r.trials;
    const double v = run.ok ? run.sum_eta_alpha_delta : kInfinity;
    r.worst_margin = std::min(r.worst_margin, bound - v);
    if (v <= bound) ++ok;
  }
  finish_frequency(r, ok);
  r.details = "bound " + fmt(bound) + ", holding in " + std::to_string(ok) + "/" +
              std::to_string(r.trials) + " runs";
  return r;
}

CheckReport check_t2_mass(const EnsembleSummary& summary, double required) {
  CheckReport r;
  r.name = "t2_mass";
  r.required_frequency = required;
  std::uint64_t ok = 0;
  for (const auto& run : summary.runs) {
    ++r.trials;
    r.worst_margin = std::min(r.worst_margin, run.t2_fraction - 0.5);
    if (run.ok && run.t2_fraction >= 0.5) ++ok;
  }
  finish_frequency(r, ok);
  r.details = "|T2| >= T/2 in " + std::to_string(ok) + "/" + std::to_string(r.trials) + " runs";
  return r;
}

CheckReport check_martingale_bound(std::uint64_t T, double lambda, double delta,
                                   std::uint64_t trials, MartingaleSchedule schedule,
                                   std::uint64_t seed) {
  if (trials < 1000) throw ConfigError("martingale check needs at least 1000 trials");
  if (!(lambda > 0.0)) throw DomainError("martingale check: lambda must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("martingale check: delta in (0,1)");
  CheckReport r;
  r.name = "martingale_bound";
  r.trials = trials;
  r.required_frequency = 1.0 - delta - monte_carlo_slack(delta, trials);

  std::vector<double> sig(T);
  double sum_sq = 0.0;
  for (std::uint64_t t = 0; t < T; ++t) {
    switch (schedule) {
      case MartingaleSchedule::rademacher: sig[t] = 1.0; break;
      case MartingaleSchedule::zero: sig[t] = 0.0; break;
      case MartingaleSchedule::decaying: sig[t] = 1.0 / std::sqrt(static_cast<double>(t + 1)); break;
    }
    sum_sq += sig[t] * sig[t];
  }
  const double bound = 0.75 * lambda * sum_sq + std::log(1.0 / delta) / lambda;

  RandomStream s(seed, 0x4D00);
  std::uint64_t ok = 0;
  for (std::uint64_t k = 0; k < trials; ++k) {
    double sum = 0.0;
    std::array<std::uint32_t, 4> block{};
    for (std::uint64_t t = 0; t < T; ++t) {
      // One block supplies 128 signs.
      const std::uint64_t j = t % 128;
      if (j == 0) block = s.next_block();
      const bool plus = (block[j / 32] >> (j % 32)) & 1u;
      sum += plus ? sig[t] : -sig[t];
    }
    r.worst_margin = std::min(r.worst_margin, bound - sum);
    if (sum <= bound) ++ok;
  }
  finish_frequency(r, ok);
  r.details = "bound " + fmt(bound) + ", holding frequency " + fmt(r.observed_frequency) +
              " (required " + fmt(r.required_frequency) + ")";
  return r;
}

CheckReport check_adaptive_telescoping(const RunTrace& trace, const Vector& x_star, double R,
                                       double rel_slack) {
  CheckReport r;
  r.name = "adaptive_telescoping";
  if (!std::isfinite(R)) throw DomainError("telescoping check needs a finite R");
  if (!trace.xs.empty()) {
    if (trace.gs.size() != trace.xs.size() || trace.alphas.size() != trace.xs.size()) {
      throw DataError("telescoping check: trace vectors are inconsistent");
    }
    double lhs = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < trace.xs.size(); ++t) {
      const double a = trace.alphas[t];
      const Vector& g = trace.gs[t];
      lhs += a * (dot(g, trace.xs[t]) - dot(g, x_star));
      sq += a * a * dot(g, g);
      record(r, lhs, 2.0 * R * std::sqrt(sq), rel_slack);
    }
  } else {
    if (trace.T == 0) throw DataError("telescoping check: empty trace");
    record(r, trace.telescoping_lhs, 2.0 * R * std::sqrt(trace.telescoping_sum_sq), rel_slack);
  }
  finish_count(r);
  r.details = "R=" + fmt(R) + ", prefixes checked " + std::to_string(r.trials);
  return r;
}

TheoremBound theorem_bound(Variant variant, const Scalars& s, double sigma) {
  TheoremBound b;
  const double T = static_cast<double>(s.T);
  if (is_adaptive(variant)) {
    if (!std::isfinite(s.R)) throw DomainError("adaptive bound needs a finite R");
    b.value = 50.0 * (15.0 * s.L0 * s.R * s.R + log_plus(1.0 / s.delta) * sigma * s.R * std::sqrt(T)) / T;
    b.precondition_met = adaptive_rate_condition(s);
    b.formula = "50 (15 L0 R^2 + log_+(1/delta) sigma R sqrt(T)) / T";
  } else {
    b.value = 64.0 * log_plus(T / s.delta) * (11.0 * s.L0 * s.R0 * s.R0 + sigma * s.R0 * std::sqrt(T)) / T;
    b.precondition_met = clipped_rate_condition(s);
    b.formula = "64 log_+(T/delta) (11 L0 R0^2 + sigma R0 sqrt(T)) / T";
  }
  return b;
}

CheckReport check_theorem_bound(const EnsembleSummary& summary, const Scalars& scalars,
                                Variant variant, const NoiseModel& noise, double sigma_prime,
                                bool enforce_precondition) {
  CheckReport r;
  r.name = "theorem_bound";
  const TheoremBound b = theorem_bound(variant, scalars, sigma_prime);
  std::string pre = b.precondition_met ? "precondition met" : "precondition unmet";
  if (!b.precondition_met && enforce_precondition) {
    r.status = CheckStatus::skipped;
    r.details = pre + " (" + b.formula + " = " + fmt(b.value) + ")";
    return r;
  }
  const bool deterministic = noise.kind == NoiseKind::none || noise.sigma == 0.0;
  const std::uint64_t n = summary.runs.size();
  if (deterministic) {
    r.required_frequency = 1.0;
  } else {
    const double p = noise.kind == NoiseKind::sub_gaussian ? 2.0 * scalars.delta : scalars.delta;
    r.required_frequency = 1.0 - p - monte_carlo_slack(p, n);
  }
  std::uint64_t ok = 0;
  for (const auto& run : summary.runs) {
    ++r.trials;
    const double gap = run.ok ? run.final_gap : kInfinity;
    r.worst_margin = std::min(r.worst_margin, b.value - gap);
    if (gap <= b.value) ++ok;
  }
  finish_frequency(r, ok);
  r.details = b.formula + " = " + fmt(b.value) + "; " + pre + "; required frequency " +
              fmt(r.required_frequency) + (deterministic ? " (noise-free, hard)" : "") +
              "; median final gap " + fmt(summary.median_final_gap);
  return r;
}

CheckReport check_bounded_oracle(GradientOracle& oracle, const Vector& x, std::uint64_t draws) {
  CheckReport r;
  r.name = "bounded_oracle";
  const NoiseModel nm = oracle.noise();
  if (nm.kind != NoiseKind::bounded) throw ConfigError("bounded_oracle check needs bounded noise");
  const Vector grad = oracle.objective().gradient(x);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    const double dev = distance(oracle.sample(x), grad);
    worst = std::max(worst, dev);
    ++r.trials;
    r.worst_margin = std::min(r.worst_margin, nm.sigma - dev);
    if (dev > nm.sigma) ++r.violations;
  }
  finish_count(r);
  r.details = "sigma " + fmt(nm.sigma) + ", max deviation " + fmt(worst);
  return r;
}

CheckReport check_subgaussian_moment(GradientOracle& oracle, const Vector& x,
                                     std::uint64_t draws) {
  CheckReport r;
  r.name = "subgaussian_moment";
  const NoiseModel nm = oracle.noise();
  if (nm.kind != NoiseKind::sub_gaussian || !(nm.sigma > 0.0)) {
    throw ConfigError("subgaussian_moment check needs sub-Gaussian noise with sigma > 0");
  }
  if (draws < 2) throw ConfigError("subgaussian_moment check needs at least 2 draws");
  const Vector grad = oracle.objective().gradient(x);
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 1; i <= draws; ++i) {
    const Vector xi = oracle.sample(x) - grad;
    const double v = std::exp(dot(xi, xi) / (nm.sigma * nm.sigma));
    const double d = v - mean;
    mean += d / static_cast<double>(i);
    m2 += d * (v - mean);
  }
  const double se = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  const double limit = std::numbers::e + 3.0 * se;
  r.trials = draws;
  r.worst_margin = limit - mean;
  r.violations = mean > limit ? 1 : 0;
  finish_count(r);
  r.observed_frequency = mean;
  r.required_frequency = limit;
  r.details = "mean exp(|xi|^2/sigma^2) = " + fmt(mean) + ", limit e + 3 SE = " + fmt(limit);
  return r;
}

CheckReport check_double_sample_independence(GradientOracle& oracle, const Vector& x,
                                             std::uint64_t pairs, double max_abs_corr) {
  CheckReport r;
  r.name = "double_sample_independence";
  const Vector grad = oracle.objective().gradient(x);
  const std::size_t d = grad.size();
  std::vector<double> s1(d), s2(d), s11(d), s22(d), s12(d);
  for (std::uint64_t k = 0; k < pairs; ++k) {
    auto [a, b] = oracle.double_sample(x);
    for (std::size_t i = 0; i < d; ++i) {
      const double u = a[i] - grad[i];
      const double v = b[i] - grad[i];
      s1[i] += u;
      s2[i] += v;
      s11[i] += u * u;
      s22[i] += v * v;
      s12[i] += u * v;
    }
  }
  const double n = static_cast<double>(pairs);
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double cov = s12[i] / n - (s1[i] / n) * (s2[i] / n);
    const double v1 = s11[i] / n - (s1[i] / n) * (s1[i] / n);
    const double v2 = s22[i] / n - (s2[i] / n) * (s2[i] / n);
    const double rho = (v1 > 0.0 && v2 > 0.0) ? cov / std::sqrt(v1 * v2) : 0.0;
    worst = std::max(worst, std::abs(rho));
    record(r, std::abs(rho), max_abs_corr, 0.0);
  }
  finish_count(r);
  r.details = "max |rho| = " + fmt(worst) + " over " + std::to_string(d) + " coordinates, " +
              std::to_string(pairs) + " pairs";
  return r;
}

CheckReport check_unbiasedness(GradientOracle& oracle, const Vector& x, std::uint64_t draws,
                               double z) {
  CheckReport r;
  r.name = "oracle_unbiasedness";
  if (draws < 2) throw ConfigError("unbiasedness check needs at least 2 draws");
  const Vector grad = oracle.objective().gradient(x);
  const std::size_t d = grad.size();
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  for (std::uint64_t k = 1; k <= draws; ++k) {
    const Vector s = oracle.sample(x);
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = s[i] - mean[i];
      mean[i] += diff / static_cast<double>(k);
      m2[i] += diff * (s[i] - mean[i]);
    }
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double se = std::sqrt(m2[i] / static_cast<double>(draws - 1) / static_cast<double>(draws));
    const double err = std::abs(mean[i] - grad[i]);
    // A zero-variance coordinate must match exactly (up to rounding).
    const double limit = se > 0.0 ? z * se : 1e-12 * std::max(1.0, std::abs(grad[i]));
    if (se > 0.0) worst_z = std::max(worst_z, err / se);
    record(r, err, limit, 0.0);
  }
  finish_count(r);
  r.details = "max |mean - grad| / SE = " + fmt(worst_z) + " (limit " + fmt(z) + ")";
  return r;
}

CheckReport check_gradient_fd(const Objective& obj, const BallRegion& region, std::size_t points,
                              double tol, std::uint64_t seed) {
  CheckReport r;
  r.name = "gradient_finite_difference";
  RandomStream s(seed, 0x4600);
  double worst = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const Vector x = sample_in_ball(s, region);
    const Vector g = obj.gradient(x);
    const Vector fd = finite_difference_gradient(obj, x);
    const double scale = std::max(norm(g), norm(fd));
    const double rel = scale > 0.0 ? distance(g, fd) / scale : 0.0;
    worst = std::max(worst, rel);
    record(r, rel, tol, 0.0);
  }
  finish_count(r);
  r.details = obj.name() + ": max relative error " + fmt(worst);
  return r;
}

CheckReport check_monotone_gap(const RunTrace& trace, double rel_slack) {
  CheckReport r;
  r.name = "monotone_gap";
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    record(r, trace.records[k].f_gap, trace.records[k - 1].f_gap, rel_slack);
  }
  finish_count(r);
  r.details = std::to_string(r.trials) + " consecutive recorded pairs";
  return r;
}

}  // namespace clipsgd
