#include "clipsgd/harness/suite.hpp"

#include <cmath>

#include "clipsgd/harness/experiment.hpp"

namespace clipsgd::harness {

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t i = 0; i < count; ++i) s[i] = base + i;
  return s;
}

CheckReport named(CheckReport r, const std::string& suffix) {
  r.name += suffix;
  return r;
}

ExperimentSpec synthetic_spec(std::uint64_t T, std::size_t seeds, unsigned workers) {
  ExperimentSpec spec;
  spec.name = "synthetic";
  spec.objective.type = "quartic_synthetic";
  spec.objective.dim = 20;
  spec.noise.kind = "gaussian";
  spec.noise.norm_variance = 4e3;
  spec.x0_fill = 1.75;
  spec.T = T;
  spec.seeds = seed_range(0, seeds);
  spec.record_every = T;
  spec.workers = workers;
  MethodSpec m;
  m.label = "standard";
  m.variant = Variant::standard;
  TunerSpec tuner;
  tuner.lr_values = {0.01, 0.1, 1.0, 10.0, 100.0};
  tuner.seeds = seed_range(1000, 20);
  m.tuner = tuner;
  spec.methods = {m};
  return spec;
}

// Conservative clipping on cosh(1, 1) from x0 = 10 without noise.
RunConfig cosh_deterministic_config() {
  RunConfig cfg;
  cfg.method.variant = Variant::conservative;
  cfg.method.scalars = Scalars{1.0, 1.0, 0.0, 0.05, 4000000, 10.0};
  cfg.oracle = make_noisy_oracle(make_cosh(1.0, 1.0), NoiseModel::none(), 0);
  cfg.x0 = Vector{10.0};
  cfg.T = 4000000;
  cfg.record_every = cfg.T;
  return cfg;
}

// Conservative clipping on cosh(1, 1) from x0 = 3.5 with bounded noise 0.05,
// a configuration that meets the T condition of the convergence theorem.
RunConfig cosh_noisy_config() {
  const NoiseModel noise = NoiseModel::bounded(0.05);
  RunConfig cfg;
  cfg.method.variant = Variant::conservative;
  cfg.method.scalars = Scalars{1.0, 1.0, 0.05, 0.05, 1000000, 3.5};
  cfg.method.sigma_prime = effective_sigma(noise, cfg.method.scalars.T, 0.05);
  cfg.oracle = make_noisy_oracle(make_cosh(1.0, 1.0), noise, 0);
  cfg.x0 = Vector{3.5};
  cfg.T = 1000000;
  cfg.record_every = cfg.T;
  return cfg;
}

std::shared_ptr<const RegressionData> small_regression_data() {
  auto data = std::make_shared<RegressionData>();
  RandomStream rng(7, 0);
  const int n = 60, d = 4;
  data->X.resize(n, d);
  data->y.resize(n);
  std::vector<double> z(d + 1);
  for (int i = 0; i < n; ++i) {
    rng.standard_normal(z);
    data->X(i, 0) = 1.0;
    for (int j = 1; j < d; ++j) data->X(i, j) = z[j];
    data->y(i) = 0.5 * z[1] - z[2] + 0.3 * z[d];
  }
  for (int j = 0; j < d; ++j) {
    data->feature_names.push_back(j == 0 ? "bias" : "x" + std::to_string(j));
    data->kinds.push_back(j == 0 ? ColumnKind::bias : ColumnKind::numeric);
  }
  data->target_name = "y";
  return data;
}

std::vector<CheckReport> smoothness(const SuiteOptions&) {
  const ObjectivePtr cosh = make_cosh(1.0, 1.0);
  const std::vector<double> a = harmonic_diagonal(20);
  const Vector x0(20, 1.75);
  const BallRegion quartic_region{Vector(20, 0.0), 2.0 * norm(x0)};
  const ObjectivePtr quartic = make_quartic_synthetic(a, quartic_region);
  return {named(check_smoothness_lemmas(*cosh, BallRegion{Vector{0.0}, 5.0}, 10000), "[cosh]"),
          named(check_smoothness_lemmas(*quartic, quartic_region, 10000), "[quartic]")};
}

std::vector<CheckReport> hierarchy(const SuiteOptions&) {
  return {check_stepsize_hierarchy(10000)};
}

std::vector<CheckReport> deterministic_bound(const SuiteOptions&) {
  const RunConfig cfg = cosh_deterministic_config();
  const std::vector<std::uint64_t> seeds{0};
  const EnsembleSummary s = run_ensemble(cfg, seeds);
  const Scalars& sc = cfg.method.scalars;
  return {check_theorem_bound(s, sc, Variant::conservative, NoiseModel::none(), 0.0, false),
          named(check_t2_mass(s, 1.0 - 2.0 * sc.delta - 0.03), "[deterministic]")};
}

std::vector<CheckReport> noisy_claims(const SuiteOptions& opt) {
  const RunConfig cfg = cosh_noisy_config();
  EnsembleOptions eo;
  eo.workers = opt.workers;
  eo.keep_traces = true;
  const std::vector<std::uint64_t> seeds = seed_range(0, 200);
  const EnsembleSummary s = run_ensemble(cfg, seeds, eo);
  const Scalars& sc = cfg.method.scalars;
  std::vector<CheckReport> out{named(check_t2_mass(s, 1.0 - 2.0 * sc.delta - 0.03), "[noisy]"),
                               check_progress_sum(s, sc, 1.0 - sc.delta - 0.03)};
  out.push_back(check_progress_claim(*s.runs.front().trace, sc, cfg.method.sigma_prime));
  return out;
}

std::vector<CheckReport> martingale(const SuiteOptions&) {
  return {named(check_martingale_bound(100, 0.5, 0.05, 10000), "[rademacher]"),
          named(check_martingale_bound(100, 0.5, 0.05, 10000, MartingaleSchedule::zero),
                "[zero]"),
          named(check_martingale_bound(100, 0.5, 0.05, 10000, MartingaleSchedule::decaying),
                "[decaying]")};
}

std::vector<CheckReport> oracles(const SuiteOptions&) {
  const ObjectivePtr quartic = make_quartic_synthetic(harmonic_diagonal(20));
  const Vector x(20, 0.5);
  OraclePtr bounded = make_noisy_oracle(quartic, NoiseModel::bounded(2.0), 11);
  OraclePtr gauss = make_noisy_oracle(quartic, NoiseModel::sub_gaussian(3.0, 20), 12);
  OraclePtr pairs = make_noisy_oracle(quartic, NoiseModel::sub_gaussian(3.0, 20), 13);
  OraclePtr mean = make_noisy_oracle(quartic, NoiseModel::bounded(2.0), 14);
  return {check_bounded_oracle(*bounded, x, 1000000),
          check_subgaussian_moment(*gauss, x, 100000),
          check_double_sample_independence(*pairs, x, 100000),
          check_unbiasedness(*mean, x, 100000)};
}

std::vector<CheckReport> gradients(const SuiteOptions&) {
  const ObjectivePtr cosh = make_cosh(1.0, 1.0);
  const ObjectivePtr quad = make_quadratic(5);
  const ObjectivePtr quartic = make_quartic_synthetic(harmonic_diagonal(20));
  const auto regression = make_quartic_regression(small_regression_data());
  return {named(check_gradient_fd(*cosh, BallRegion{Vector{0.0}, 5.0}, 100), "[cosh]"),
          named(check_gradient_fd(*quad, BallRegion{Vector(5, 0.0), 3.0}, 100), "[quadratic]"),
          named(check_gradient_fd(*quartic, BallRegion{Vector(20, 0.0), 15.0}, 100),
                "[quartic_synthetic]"),
          named(check_gradient_fd(*regression, BallRegion{regression->x_star(), 2.0}, 100),
                "[quartic_regression]")};
}

std::vector<CheckReport> telescoping(const SuiteOptions&) {
  const ObjectivePtr quartic = make_quartic_synthetic(harmonic_diagonal(20));
  const NoiseModel noise = NoiseModel::gaussian_norm_variance(4e3, 20);
  RunConfig cfg;
  cfg.method.variant = Variant::adaptive;
  cfg.x0 = Vector(20, 1.75);
  const double r0 = norm(cfg.x0);
  cfg.method.scalars = Scalars{quartic->L0(), quartic->L1(), noise.sigma, 0.05, 1000, r0, 2.0 * r0};
  cfg.method.sigma_prime = effective_sigma(noise, 1000, 0.05);
  cfg.oracle = make_noisy_oracle(quartic, noise, 0);
  cfg.T = 1000;
  cfg.record_every = 100;
  cfg.keep_vectors = true;

  CheckReport total;
  total.name = "adaptive_telescoping";
  total.worst_margin = kInfinity;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const CheckReport r =
        check_adaptive_telescoping(run(cfg), quartic->x_star(), cfg.method.scalars.R);
    total.trials += r.trials;
    total.violations += r.violations;
    total.worst_margin = std::min(total.worst_margin, r.worst_margin);
  }
  total.status = total.violations == 0 ? CheckStatus::pass : CheckStatus::fail;
  total.details = "10 adaptive runs, every prefix checked";
  return {total};
}

std::vector<CheckReport> rate(const SuiteOptions& opt) {
  const RateScaling rs = synthetic_rate_scaling({1000, 4000, 16000}, 100, opt.workers);
  CheckReport r;
  r.name = "rate_scaling";
  std::string details = "median gaps";
  for (double g : rs.median_gap) details += " " + std::to_string(g);
  details += "; ratios";
  for (double q : rs.ratios) {
    ++r.trials;
    r.worst_margin = std::min({r.worst_margin, q - 1.4, 2.9 - q});
    if (!(q >= 1.4 && q <= 2.9)) ++r.violations;
    details += " " + std::to_string(q);
  }
  r.status = r.violations == 0 ? CheckStatus::pass : CheckStatus::fail;
  r.details = details + "; required each ratio in [1.4, 2.9]";
  return {r};
}

}  // namespace

RateScaling synthetic_rate_scaling(const std::vector<std::uint64_t>& horizons, std::size_t seeds,
                                   unsigned workers) {
  RateScaling out;
  out.horizons = horizons;
  for (std::uint64_t T : horizons) {
    const ExperimentSpec spec = synthetic_spec(T, seeds, workers);
    const Problem problem = prepare_problem(spec);
    const TuneResult tr = tune_method(spec, problem, spec.methods.front());
    MethodSpec m = spec.methods.front();
    m.lr_scale = tr.lr;
    const RunConfig cfg = make_run_config(spec, problem, m);
    EnsembleOptions eo;
    eo.workers = workers;
    const EnsembleSummary s = run_ensemble(cfg, spec.seeds, eo);
    out.tuned_lr.push_back(tr.lr);
    out.median_gap.push_back(s.median_final_gap);
  }
  for (std::size_t i = 1; i < out.median_gap.size(); ++i) {
    out.ratios.push_back(out.median_gap[i - 1] / out.median_gap[i]);
  }
  return out;
}

const std::vector<SuiteCheck>& verification_suite() {
  static const std::vector<SuiteCheck> suite = {
      {"smoothness", "(L0, L1) inequality and its two consequences on cosh and the quartic",
       false, smoothness},
      {"hierarchy", "step-size ordering conservative <= standard <= implicit", false, hierarchy},
      {"deterministic_bound", "deterministic conservative clipping on cosh(1,1) from x0 = 10, T = 4e6",
       false, deterministic_bound},
      {"claims", "T2 mass, summed progress and clipped progress over 200 noisy cosh runs", true,
       noisy_claims},
      {"martingale", "concentration bound over 1e4 Rademacher martingales", false, martingale},
      {"oracles", "bounded, sub-Gaussian, independence and unbiasedness contracts", false,
       oracles},
      {"gradients", "builtin gradients against central finite differences", false, gradients},
      {"telescoping", "adaptive telescoping inequality on 10 traced runs", false, telescoping},
      {"rate", "tuned standard clipping on the synthetic quartic at T = 1e3, 4e3, 1.6e4", true,
       rate},
  };
  return suite;
}

std::vector<CheckReport> run_suite_check(const std::string& name, const SuiteOptions& options) {
  for (const auto& c : verification_suite()) {
    if (c.name == name) return c.run(options);
  }
  throw ConfigError("unknown check: " + name);
}

}  // namespace clipsgd::harness
