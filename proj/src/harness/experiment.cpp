#include "clipsgd/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "clipsgd/harness/csv.hpp"
#include "clipsgd/harness/ingest.hpp"
#include "clipsgd/verify.hpp"

namespace clipsgd::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

Vector starting_point(const ExperimentSpec& spec, std::size_t dim) {
  if (spec.x0_fill) return Vector(dim, *spec.x0_fill);
  if (spec.x0.size() != dim) {
    throw ConfigError("spec.x0 has " + std::to_string(spec.x0.size()) +
                      " entries but the objective has dimension " + std::to_string(dim));
  }
  return Vector(spec.x0);
}

NoiseModel noise_model(const NoiseSpec& n, std::size_t dim) {
  const NoiseKind kind = parse_noise_kind(n.kind);
  if (n.kind == "gaussian") return NoiseModel::gaussian_norm_variance(n.norm_variance, dim);
  switch (kind) {
    case NoiseKind::none: return NoiseModel::none();
    case NoiseKind::bounded: return NoiseModel::bounded(n.sigma);
    case NoiseKind::sub_gaussian: return NoiseModel::sub_gaussian(n.sigma, dim);
  }
  throw ConfigError("unknown noise kind " + n.kind);
}

double default_region_radius(const Vector& x0, const Vector& x_star) {
  const double r = 2.0 * distance(x0, x_star);
  return r > 0.0 ? r : 1.0;
}

// Parameters equal to the closed-form values, so the theorem checks apply.
bool theory_parameters(const RunConfig& cfg) {
  const MethodConfig& m = cfg.method;
  return m.mode == StepMode::theory && m.lr_scale == 1.0 && !m.threshold_override &&
         m.implicit_rule == ImplicitRule::theory && !is_plain(m.variant) &&
         cfg.sampling == Sampling::double_sample &&
         cfg.effective_averaging() == Averaging::t2_rule && m.adaptive_include_current;
}

CheckReport skipped(const std::string& name, const std::string& why) {
  CheckReport r;
  r.name = name;
  r.status = CheckStatus::skipped;
  r.details = why;
  return r;
}

std::string safe_component(const std::string& label) {
  std::string out = label;
  for (char& ch : out) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' || ch == '.';
    if (!ok) ch = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(format_double(v));
}

}  // namespace

Problem prepare_problem(const ExperimentSpec& spec) {
  const ObjectiveSpec& o = spec.objective;
  Problem p;
  CertifyOptions copts;
  copts.samples = o.certify_samples;

  if (o.type == "quartic_regression") {
    if (parse_noise_kind(spec.noise.kind) != NoiseKind::none) {
      throw ConfigError("quartic_regression draws its noise from minibatches; noise must be none");
    }
    IngestOptions iopts;
    iopts.shuffle_seed = o.shuffle_seed.value_or(spec.seeds.front());
    iopts.drop_first_level = o.drop_first_level;
    IngestReport report;
    auto data = std::make_shared<RegressionData>(ingest_csv(o.csv, o.target, iopts, &report));
    for (const auto& w : report.warnings) p.notes.push_back("ingest: " + w);
    const std::size_t n = static_cast<std::size_t>(data->X.rows());
    if (o.batch < 1 || o.batch > n) {
      throw ConfigError("objective.batch must lie in [1, " + std::to_string(n) + "]");
    }
    p.x0 = starting_point(spec, static_cast<std::size_t>(data->X.cols()));
    const LeastSquares ls = least_squares_solution(*data);
    p.certify_region = BallRegion{ls.w, o.certify_radius.value_or(default_region_radius(p.x0, ls.w))};
    auto obj = make_quartic_regression(data, p.certify_region, copts);
    if (obj->used_ridge()) p.notes.push_back("Gram matrix was near singular; a small ridge was added");
    p.objective = obj;
    p.noise = NoiseModel::none();
    p.oracle = make_minibatch_oracle(obj, o.batch, spec.seeds.front());
    p.notes.push_back("minibatch noise; theorem checks use sigma = 0 and are skipped unless b = n");
  } else {
    if (o.type == "cosh") {
      p.objective = make_cosh(o.L0, o.L1);
    } else if (o.type == "quadratic") {
      p.objective = make_quadratic(o.dim);
    } else if (o.type == "quartic_synthetic") {
      std::vector<double> a = o.diag.empty() ? harmonic_diagonal(o.dim) : o.diag;
      const Vector x_star(a.size(), 0.0);
      const Vector x0 = starting_point(spec, a.size());
      BallRegion region{x_star, o.certify_radius.value_or(default_region_radius(x0, x_star))};
      p.objective = make_quartic_synthetic(std::move(a), region, copts);
    } else {
      throw ConfigError("unknown objective type " + o.type);
    }
    const std::size_t dim = p.objective->dimension();
    p.x0 = starting_point(spec, dim);
    p.certify_region = BallRegion{
        p.objective->x_star(),
        o.certify_radius.value_or(default_region_radius(p.x0, p.objective->x_star()))};
    p.noise = noise_model(spec.noise, dim);
    p.oracle = make_noisy_oracle(p.objective, p.noise, spec.seeds.front());
  }

  const double r0 = distance(p.x0, p.objective->x_star());
  if (r0 > 0.0) {
    p.R0 = r0;
  } else {
    p.R0 = 1.0;
    p.notes.push_back("x0 equals x_star; R0 set to 1");
  }
  return p;
}

RunConfig make_run_config(const ExperimentSpec& spec, const Problem& problem,
                          const MethodSpec& method, std::optional<std::uint64_t> T) {
  std::uint64_t horizon = T.value_or(spec.T);
  std::uint64_t record_every = spec.record_every;
  if (spec.budget == Budget::equal_oracle_calls && method.sampling == Sampling::single) {
    horizon *= 2;
    record_every *= 2;
  }

  MethodConfig m;
  m.variant = method.variant;
  m.scalars.L0 = problem.objective->L0();
  m.scalars.L1 = problem.objective->L1();
  m.scalars.sigma = problem.noise.sigma;
  m.scalars.delta = spec.delta;
  m.scalars.T = horizon;
  m.scalars.R0 = problem.R0;
  if (method.R) {
    m.scalars.R = *method.R;
  } else if (is_adaptive(method.variant)) {
    m.scalars.R = 2.0 * problem.R0;
  }
  m.sigma_prime = effective_sigma(problem.noise, horizon, spec.delta, spec.sigma_prime_factor);
  m.lr_scale = method.lr_scale;
  m.threshold_override = method.threshold;
  m.mode = method.mode;
  m.implicit_rule = method.implicit_rule;
  m.adaptive_include_current = method.adaptive_include_current;

  RunConfig cfg;
  cfg.method = m;
  cfg.oracle = problem.oracle;
  cfg.x0 = problem.x0;
  cfg.T = horizon;
  cfg.sampling = method.sampling;
  cfg.averaging = method.averaging;
  cfg.record_every = record_every;
  cfg.seed = spec.seeds.front();
  return cfg;
}

std::optional<TunerSpec> tuner_for(const ExperimentSpec& spec, const MethodSpec& method) {
  if (method.tuner) return method.tuner;
  return spec.tuner;
}

TuneResult tune_method(const ExperimentSpec& spec, const Problem& problem,
                       const MethodSpec& method) {
  const std::optional<TunerSpec> grid = tuner_for(spec, method);
  if (!grid) throw ConfigError("method " + method.label + " has no tuner grid");
  RunConfig base = make_run_config(spec, problem, method, grid->T);
  base.record_every = base.T;
  base.method.validate();
  const std::vector<std::uint64_t>& seeds = grid->seeds.empty() ? spec.seeds : grid->seeds;
  return tune(base, seeds, *grid, spec.workers);
}

BundleResult run_experiment(const ExperimentSpec& spec, std::optional<fs::path> output) {
  BundleResult bundle;
  bundle.directory = output.value_or(spec.output);
  const fs::path& dir = bundle.directory;
  fs::create_directories(dir);
  // Stale per-method files from an earlier run would otherwise survive.
  fs::remove_all(dir / "traces");
  fs::remove_all(dir / "tuning");

  const Problem problem = prepare_problem(spec);
  const Objective& obj = *problem.objective;

  if (spec.checks) {
    const std::size_t samples = spec.objective.type == "quartic_regression" ? 1000 : 10000;
    bundle.checks.push_back({"-", check_smoothness_lemmas(obj, problem.certify_region, samples)});
    bundle.checks.push_back({"-", check_gradient_fd(obj, problem.certify_region, 100)});
  }

  std::vector<SeriesSummary> series;
  std::string finals;
  ordered_json methods_json = ordered_json::array();

  for (const MethodSpec& method : spec.methods) {
    MethodOutcome outcome;
    outcome.label = method.label;
    ordered_json mj;
    mj["label"] = method.label;
    mj["variant"] = to_string(method.variant);
    mj["sampling"] = to_string(method.sampling);
    try {
      MethodSpec tuned = method;
      if (tuner_for(spec, method)) {
        const TuneResult tr = tune_method(spec, problem, method);
        write_file_atomic(dir / "tuning" / (safe_component(method.label) + ".csv"), tuning_csv(tr));
        tuned.lr_scale = tr.lr;
        if (tr.c) tuned.threshold = tr.c;
        mj["tuning"] = {{"lr", tr.lr},
                        {"c", tr.c ? ordered_json(*tr.c) : ordered_json(nullptr)},
                        {"score", number_or_null(tr.score)},
                        {"cells", tr.cells.size()},
                        {"extensions", tr.extensions},
                        {"winner_on_edge", tr.winner_on_edge},
                        {"notes", tr.notes}};
      }

      RunConfig cfg = make_run_config(spec, problem, tuned);
      cfg.validate();
      const double c = threshold(cfg.method);
      outcome.lr_scale = cfg.method.lr_scale;
      outcome.threshold = c;
      mj["averaging"] = to_string(cfg.effective_averaging());
      mj["mode"] = to_string(cfg.method.mode);
      mj["lr_scale"] = cfg.method.lr_scale;
      mj["threshold"] = number_or_null(c);
      mj["R"] = number_or_null(cfg.method.scalars.R);
      mj["sigma_prime"] = cfg.method.sigma_prime;
      mj["iterations"] = cfg.T;

      EnsembleOptions eopts;
      eopts.workers = spec.workers;
      eopts.keep_traces = true;
      const EnsembleSummary summary = run_ensemble(cfg, spec.seeds, eopts);

      const fs::path trace_dir = dir / "traces" / safe_component(method.label);
      for (std::size_t i = 0; i < summary.runs.size(); ++i) {
        const RunOutcome& r = summary.runs[i];
        if (!r.trace) continue;
        write_file_atomic(trace_dir / ("seed_" + std::to_string(r.seed) + ".csv"),
                          trace_csv(*r.trace, i, method.label));
      }
      series.push_back({method.label, summary.checkpoints});
      finals += finals_csv_rows(method.label, summary, finals.empty());

      outcome.ok = true;
      outcome.median_final_gap = summary.median_final_gap;
      outcome.failures = summary.failures;
      mj["status"] = "ok";
      mj["median_final_gap"] = number_or_null(summary.median_final_gap);
      mj["q25_final_gap"] = number_or_null(summary.q25_final_gap);
      mj["q75_final_gap"] = number_or_null(summary.q75_final_gap);
      mj["failures"] = summary.failures;

      if (spec.checks) {
        const Scalars& sc = cfg.method.scalars;
        const bool theory = theory_parameters(cfg);
        const bool exact_noise = spec.objective.type != "quartic_regression";
        const std::string why =
            !theory ? "parameters differ from the closed-form values"
                    : "minibatch noise has no declared bound";
        if (theory && exact_noise) {
          bundle.checks.push_back({method.label,
                                   check_theorem_bound(summary, sc, cfg.method.variant,
                                                       problem.noise, cfg.method.sigma_prime)});
        } else {
          bundle.checks.push_back({method.label, skipped("theorem_bound", why)});
        }
        const bool claims_apply = theory && exact_noise && !is_adaptive(cfg.method.variant) &&
                                  clipped_rate_condition(sc) &&
                                  problem.noise.kind != NoiseKind::sub_gaussian;
        if (claims_apply) {
          const double required = 1.0 - 2.0 * sc.delta - monte_carlo_slack(1.0 - 2.0 * sc.delta,
                                                                           summary.runs.size());
          bundle.checks.push_back({method.label, check_t2_mass(summary, required)});
          const double req1 =
              1.0 - sc.delta - monte_carlo_slack(1.0 - sc.delta, summary.runs.size());
          bundle.checks.push_back({method.label, check_progress_sum(summary, sc, req1)});
          const RunOutcome& first = summary.runs.front();
          if (first.trace) {
            bundle.checks.push_back({method.label, check_progress_claim(*first.trace, sc,
                                                                        cfg.method.sigma_prime)});
          }
        }
        const bool closed_form_adaptive = is_adaptive(cfg.method.variant) &&
                                          cfg.method.mode == StepMode::theory &&
                                          cfg.method.lr_scale == 1.0 &&
                                          cfg.method.adaptive_include_current;
        if (is_adaptive(cfg.method.variant) && !closed_form_adaptive) {
          bundle.checks.push_back({method.label, skipped("adaptive_telescoping",
                                                         "step is not R / sqrt(sum)")});
        } else if (closed_form_adaptive && std::isfinite(sc.R)) {
          for (const RunOutcome& r : summary.runs) {
            if (!r.trace) continue;
            CheckReport rep = check_adaptive_telescoping(*r.trace, obj.x_star(), sc.R);
            rep.name += "[seed " + std::to_string(r.seed) + "]";
            if (!rep.passed() || &r == &summary.runs.front()) {
              bundle.checks.push_back({method.label, rep});
            }
            if (!rep.passed()) break;
          }
        }
      }
    } catch (const Error& e) {
      outcome.ok = false;
      outcome.error = e.what();
      bundle.any_failed_method = true;
      mj["status"] = "error";
      mj["error"] = e.what();
    }
    bundle.methods.push_back(outcome);
    methods_json.push_back(mj);
  }

  for (const auto& c : bundle.checks) {
    if (c.report.failed()) bundle.any_failed_check = true;
  }

  write_file_atomic(dir / "summary.csv", summary_csv(series));
  write_file_atomic(dir / "finals.csv",
                    finals.empty() ? "method,seed,status,final_gap,t2_fraction,sum_eta_alpha_delta,error\n"
                                   : finals);
  write_file_atomic(dir / "convergence.svg", convergence_svg(series, spec.name));
  write_file_atomic(dir / "checks.csv", checks_csv(bundle.checks));
  write_file_atomic(dir / "checks.json", checks_json(bundle.checks));

  ordered_json manifest;
  manifest["name"] = spec.name;
  manifest["T"] = spec.T;
  manifest["delta"] = spec.delta;
  manifest["seeds"] = spec.seeds;
  manifest["budget"] = to_string(spec.budget);
  manifest["record_every"] = spec.record_every;
  manifest["objective"] = {{"type", spec.objective.type},
                           {"dimension", obj.dimension()},
                           {"L0", obj.L0()},
                           {"L1", obj.L1()},
                           {"f_star", obj.f_star()},
                           {"R0", problem.R0},
                           {"certify_radius", problem.certify_region.radius}};
  manifest["noise"] = {{"kind", to_string(problem.noise.kind)},
                       {"sigma", problem.noise.sigma},
                       {"entry_std", problem.noise.entry_std}};
  manifest["methods"] = methods_json;
  std::vector<std::string> notes = problem.notes;
  for (const MethodSpec& m : spec.methods) {
    if (is_adaptive(m.variant) && !m.R) {
      notes.push_back("R for " + m.label + " defaults to 2 |x0 - x_star|");
    }
  }
  manifest["notes"] = notes;
  manifest["any_failed_check"] = bundle.any_failed_check;
  manifest["any_failed_method"] = bundle.any_failed_method;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return bundle;
}

}  // namespace clipsgd::harness
