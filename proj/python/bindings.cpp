#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "clipsgd/harness/experiment.hpp"
#include "clipsgd/harness/ingest.hpp"
#include "clipsgd/harness/suite.hpp"

namespace py = pybind11;
using namespace clipsgd;

namespace {

struct PyObjective {
  ObjectivePtr ptr;
};

Vector to_vector(const std::vector<double>& v) { return Vector(v); }

py::array_t<double> to_array(const Vector& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.values().data());
}

NoiseModel make_noise(const std::string& kind, double sigma, double norm_variance,
                      std::size_t dim) {
  if (kind == "none") return NoiseModel::none();
  if (kind == "bounded") return NoiseModel::bounded(sigma);
  if (kind == "sub_gaussian") return NoiseModel::sub_gaussian(sigma, dim);
  if (kind == "gaussian") return NoiseModel::gaussian_norm_variance(norm_variance, dim);
  throw ConfigError("unknown noise kind: " + kind);
}

struct RunArgs {
  std::string variant = "standard";
  std::string noise = "none";
  double sigma = 0.0;
  double norm_variance = 0.0;
  double delta = 0.05;
  double lr = 1.0;
  std::optional<double> threshold;
  std::string mode = "theory";
  std::optional<double> R;
  std::string sampling = "double";
  std::optional<std::string> averaging;
  std::uint64_t record_every = 1;
};

RunConfig build_config(const PyObjective& obj, const std::vector<double>& x0, std::uint64_t T,
                       const RunArgs& a) {
  const Objective& f = *obj.ptr;
  const NoiseModel noise = make_noise(a.noise, a.sigma, a.norm_variance, f.dimension());
  RunConfig cfg;
  cfg.x0 = to_vector(x0);
  cfg.T = T;
  cfg.record_every = a.record_every;
  cfg.sampling = parse_sampling(a.sampling);
  if (a.averaging) cfg.averaging = parse_averaging(*a.averaging);
  cfg.oracle = make_noisy_oracle(obj.ptr, noise, 0);

  MethodConfig& m = cfg.method;
  m.variant = parse_variant(a.variant);
  const double r0 = distance(cfg.x0, f.x_star());
  m.scalars = Scalars{f.L0(), f.L1(), noise.sigma, a.delta, T, r0 > 0.0 ? r0 : 1.0};
  if (a.R) {
    m.scalars.R = *a.R;
  } else if (is_adaptive(m.variant)) {
    m.scalars.R = 2.0 * m.scalars.R0;
  }
  m.sigma_prime = effective_sigma(noise, T, a.delta);
  m.lr_scale = a.lr;
  m.threshold_override = a.threshold;
  m.mode = parse_step_mode(a.mode);
  return cfg;
}

py::dict trace_dict(const RunTrace& tr) {
  const std::size_t n = tr.records.size();
  py::array_t<std::uint64_t> t(n), calls(n);
  py::array_t<double> gap(n), gnorm(n), gtnorm(n), ea(n), dist(n);
  py::array_t<bool> clipped(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TraceRecord& r = tr.records[i];
    t.mutable_at(i) = r.t;
    calls.mutable_at(i) = r.oracle_calls;
    gap.mutable_at(i) = r.f_gap;
    gnorm.mutable_at(i) = r.grad_norm;
    gtnorm.mutable_at(i) = r.g_tilde_norm;
    ea.mutable_at(i) = r.eta_alpha;
    clipped.mutable_at(i) = r.clipped;
    dist.mutable_at(i) = r.dist_to_opt;
  }
  py::dict records;
  records["t"] = t;
  records["oracle_calls"] = calls;
  records["f_gap"] = gap;
  records["grad_norm"] = gnorm;
  records["g_tilde_norm"] = gtnorm;
  records["eta_alpha"] = ea;
  records["clipped"] = clipped;
  records["dist_to_opt"] = dist;

  py::dict d;
  d["method"] = tr.method;
  d["seed"] = tr.seed;
  d["T"] = tr.T;
  d["threshold"] = tr.threshold;
  d["T1_size"] = tr.T1_size;
  d["T2_size"] = tr.T2_size;
  d["oracle_calls"] = tr.oracle_calls;
  d["x_bar"] = to_array(tr.x_bar);
  d["x_final"] = to_array(tr.x_final);
  d["final_gap"] = tr.final_gap;
  d["sum_eta_alpha_delta"] = tr.sum_eta_alpha_delta;
  d["records"] = records;
  return d;
}

py::dict report_dict(const CheckReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["status"] = to_string(r.status);
  d["trials"] = r.trials;
  d["violations"] = r.violations;
  d["worst_margin"] = r.worst_margin;
  d["observed_frequency"] = r.observed_frequency;
  d["required_frequency"] = r.required_frequency;
  d["details"] = r.details;
  return d;
}

MethodConfig formula_config(const std::string& variant, double L0, double L1, double sigma_prime,
                            std::uint64_t T, double delta, double R0, double R) {
  MethodConfig m;
  m.variant = parse_variant(variant);
  m.scalars = Scalars{L0, L1, 0.0, delta, T, R0, R};
  m.sigma_prime = sigma_prime;
  return m;
}

}  // namespace

PYBIND11_MODULE(_clipsgd, m) {
  m.doc() = "Clipped SGD with double sampling";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);

  py::list variants;
  for (Variant v : {Variant::standard, Variant::implicit, Variant::conservative, Variant::adaptive,
                    Variant::adaptive_conservative, Variant::plain_sgd, Variant::plain_adaptive}) {
    variants.append(to_string(v));
  }
  m.attr("VARIANTS") = py::tuple(variants);

  py::class_<PyObjective>(m, "Objective")
      .def_property_readonly("name", [](const PyObjective& o) { return o.ptr->name(); })
      .def_property_readonly("dimension", [](const PyObjective& o) { return o.ptr->dimension(); })
      .def_property_readonly("L0", [](const PyObjective& o) { return o.ptr->L0(); })
      .def_property_readonly("L1", [](const PyObjective& o) { return o.ptr->L1(); })
      .def_property_readonly("x_star", [](const PyObjective& o) { return to_array(o.ptr->x_star()); })
      .def_property_readonly("f_star", [](const PyObjective& o) { return o.ptr->f_star(); })
      .def("value", [](const PyObjective& o, const std::vector<double>& x) {
        return o.ptr->value(to_vector(x));
      })
      .def("gap", [](const PyObjective& o, const std::vector<double>& x) {
        return o.ptr->gap(to_vector(x));
      })
      .def("gradient", [](const PyObjective& o, const std::vector<double>& x) {
        return to_array(o.ptr->gradient(to_vector(x)));
      })
      .def("hessian_norm", [](const PyObjective& o, const std::vector<double>& x) {
        return o.ptr->hessian_norm(to_vector(x));
      })
      .def("__repr__", [](const PyObjective& o) {
        return "<Objective " + o.ptr->name() + " d=" + std::to_string(o.ptr->dimension()) +
               " L0=" + std::to_string(o.ptr->L0()) + " L1=" + std::to_string(o.ptr->L1()) + ">";
      });

  m.def("cosh", [](double L0, double L1) { return PyObjective{make_cosh(L0, L1)}; },
        py::arg("L0") = 1.0, py::arg("L1") = 1.0, "(L0 / L1^2) cosh(L1 x)");
  m.def("quadratic", [](std::size_t dim) { return PyObjective{make_quadratic(dim)}; },
        py::arg("dim"), "0.5 |x|^2");
  m.def(
      "quartic_synthetic",
      [](std::vector<double> diag, std::optional<double> certify_radius, std::size_t samples) {
        std::optional<BallRegion> region;
        if (certify_radius) region = BallRegion{Vector(diag.size(), 0.0), *certify_radius};
        CertifyOptions opts;
        opts.samples = samples;
        return PyObjective{make_quartic_synthetic(std::move(diag), region, opts)};
      },
      py::arg("diag"), py::arg("certify_radius") = py::none(), py::arg("certify_samples") = 10000,
      "|diag(a) x|^4 with (L0, L1) certified over a ball around 0");
  m.def(
      "quartic_regression",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::optional<double> certify_radius) {
        auto data = std::make_shared<RegressionData>();
        data->X = X;
        data->y = y;
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
          data->feature_names.push_back("x" + std::to_string(j));
          data->kinds.push_back(ColumnKind::numeric);
        }
        std::optional<BallRegion> region;
        if (certify_radius) region = BallRegion{least_squares_solution(*data).w, *certify_radius};
        return PyObjective{make_quartic_regression(data, region)};
      },
      py::arg("X"), py::arg("y"), py::arg("certify_radius") = py::none(), "|X w - y|^4");
  m.def("harmonic_diagonal", &harmonic_diagonal, py::arg("dim"));

  m.def("log_plus", &log_plus, py::arg("v"), "2 + ln(v)");
  m.def(
      "project_ball",
      [](const std::vector<double>& x, const std::vector<double>& center, double radius) {
        return to_array(project_ball(to_vector(x), to_vector(center), radius));
      },
      py::arg("x"), py::arg("center"), py::arg("radius"));
  m.def("clip_factor", &clip_factor, py::arg("g_tilde_norm"), py::arg("c"));
  m.def(
      "threshold",
      [](const std::string& variant, double L0, double L1, double sigma_prime, std::uint64_t T,
         double delta, double R0, double R) {
        return threshold(formula_config(variant, L0, L1, sigma_prime, T, delta, R0, R));
      },
      py::arg("variant"), py::arg("L0"), py::arg("L1"), py::arg("sigma_prime"), py::arg("T"),
      py::arg("delta") = 0.05, py::arg("R0") = 1.0, py::arg("R") = kInfinity);
  m.def(
      "step_scale",
      [](const std::string& variant, double g_tilde_norm, double L0, double L1,
         double sigma_prime, std::uint64_t T, double delta, double R0, double R,
         double accumulator) {
        StepState st;
        st.adagrad_accumulator = accumulator;
        const StepScale s =
            step_scale(formula_config(variant, L0, L1, sigma_prime, T, delta, R0, R),
                       g_tilde_norm, st);
        return py::make_tuple(s.eta, s.alpha);
      },
      py::arg("variant"), py::arg("g_tilde_norm"), py::arg("L0"), py::arg("L1"),
      py::arg("sigma_prime"), py::arg("T"), py::arg("delta") = 0.05, py::arg("R0") = 1.0,
      py::arg("R") = kInfinity, py::arg("accumulator") = 0.0, "(eta, alpha)");

  m.def(
      "run",
      [](const PyObjective& obj, const std::vector<double>& x0, std::uint64_t T,
         const std::string& variant, const std::string& noise, double sigma, double norm_variance,
         std::uint64_t seed, double delta, double lr, std::optional<double> c,
         const std::string& mode, std::optional<double> R, const std::string& sampling,
         std::optional<std::string> averaging, std::uint64_t record_every) {
        RunConfig cfg = build_config(
            obj, x0, T,
            RunArgs{variant, noise, sigma, norm_variance, delta, lr, c, mode, R, sampling,
                    averaging, record_every});
        cfg.seed = seed;
        RunTrace tr;
        {
          py::gil_scoped_release release;
          tr = run(cfg);
        }
        return trace_dict(tr);
      },
      py::arg("objective"), py::arg("x0"), py::arg("T"), py::kw_only(),
      py::arg("variant") = "standard", py::arg("noise") = "none", py::arg("sigma") = 0.0,
      py::arg("norm_variance") = 0.0, py::arg("seed") = 0, py::arg("delta") = 0.05,
      py::arg("lr") = 1.0, py::arg("threshold") = py::none(), py::arg("mode") = "theory",
      py::arg("R") = py::none(), py::arg("sampling") = "double",
      py::arg("averaging") = py::none(), py::arg("record_every") = 1,
      "One run; returns a dict with the trace columns under 'records'.");

  m.def(
      "run_ensemble",
      [](const PyObjective& obj, const std::vector<double>& x0, std::uint64_t T,
         const std::vector<std::uint64_t>& seeds, const std::string& variant,
         const std::string& noise, double sigma, double norm_variance, double delta, double lr,
         std::optional<double> c, const std::string& mode, std::optional<double> R,
         const std::string& sampling, std::optional<std::string> averaging,
         std::uint64_t record_every, unsigned workers) {
        const RunConfig cfg = build_config(
            obj, x0, T,
            RunArgs{variant, noise, sigma, norm_variance, delta, lr, c, mode, R, sampling,
                    averaging, record_every});
        EnsembleOptions opts;
        opts.workers = workers;
        EnsembleSummary s;
        {
          py::gil_scoped_release release;
          s = run_ensemble(cfg, seeds, opts);
        }
        py::dict d;
        d["median_final_gap"] = s.median_final_gap;
        d["q25_final_gap"] = s.q25_final_gap;
        d["q75_final_gap"] = s.q75_final_gap;
        d["median_t2_fraction"] = s.median_t2_fraction;
        d["failures"] = s.failures;
        std::vector<double> finals;
        for (const auto& r : s.runs) finals.push_back(r.ok ? r.final_gap : kInfinity);
        d["final_gaps"] = finals;
        std::vector<std::uint64_t> t, calls;
        std::vector<double> med, q25, q75;
        for (const auto& cp : s.checkpoints) {
          t.push_back(cp.t);
          calls.push_back(cp.oracle_calls);
          med.push_back(cp.median);
          q25.push_back(cp.q25);
          q75.push_back(cp.q75);
        }
        d["checkpoints"] = py::dict(py::arg("t") = t, py::arg("oracle_calls") = calls,
                                    py::arg("median") = med, py::arg("q25") = q25,
                                    py::arg("q75") = q75);
        return d;
      },
      py::arg("objective"), py::arg("x0"), py::arg("T"), py::arg("seeds"), py::kw_only(),
      py::arg("variant") = "standard", py::arg("noise") = "none", py::arg("sigma") = 0.0,
      py::arg("norm_variance") = 0.0, py::arg("delta") = 0.05, py::arg("lr") = 1.0,
      py::arg("threshold") = py::none(), py::arg("mode") = "theory", py::arg("R") = py::none(),
      py::arg("sampling") = "double", py::arg("averaging") = py::none(),
      py::arg("record_every") = 1, py::arg("workers") = 0);

  m.def("list_checks", [] {
    py::list out;
    for (const auto& c : harness::verification_suite()) {
      out.append(py::dict(py::arg("name") = c.name, py::arg("description") = c.description,
                          py::arg("heavy") = c.heavy));
    }
    return out;
  });
  m.def(
      "run_check",
      [](const std::string& name, unsigned workers) {
        harness::SuiteOptions opts;
        opts.workers = workers;
        std::vector<CheckReport> reports;
        {
          py::gil_scoped_release release;
          reports = harness::run_suite_check(name, opts);
        }
        py::list out;
        for (const auto& r : reports) out.append(report_dict(r));
        return out;
      },
      py::arg("name"), py::arg("workers") = 0);

  m.def("spec_schema", [] { return harness::experiment_spec_schema(); });
  m.def(
      "load_spec",
      [](const std::filesystem::path& path) {
        const harness::ExperimentSpec s = harness::load_experiment_spec(path);
        std::vector<std::string> labels;
        for (const auto& mth : s.methods) labels.push_back(mth.label);
        return py::dict(py::arg("name") = s.name, py::arg("T") = s.T, py::arg("seeds") = s.seeds,
                        py::arg("methods") = labels, py::arg("output") = s.output.string(),
                        py::arg("budget") = std::string(harness::to_string(s.budget)));
      },
      py::arg("path"));
  m.def(
      "run_experiment",
      [](const std::filesystem::path& spec_path, std::optional<std::filesystem::path> out,
         unsigned workers) {
        harness::ExperimentSpec spec = harness::load_experiment_spec(spec_path);
        if (workers > 0) spec.workers = workers;
        harness::BundleResult b;
        {
          py::gil_scoped_release release;
          b = harness::run_experiment(spec, out);
        }
        py::list methods;
        for (const auto& mo : b.methods) {
          methods.append(py::dict(py::arg("label") = mo.label, py::arg("ok") = mo.ok,
                                  py::arg("error") = mo.error, py::arg("lr") = mo.lr_scale,
                                  py::arg("threshold") = mo.threshold,
                                  py::arg("median_final_gap") = mo.median_final_gap,
                                  py::arg("failures") = mo.failures));
        }
        py::list checks;
        for (const auto& c : b.checks) {
          py::dict d = report_dict(c.report);
          d["method"] = c.method;
          checks.append(d);
        }
        return py::dict(py::arg("directory") = b.directory.string(), py::arg("methods") = methods,
                        py::arg("checks") = checks,
                        py::arg("any_failed_check") = b.any_failed_check,
                        py::arg("any_failed_method") = b.any_failed_method);
      },
      py::arg("spec"), py::arg("out") = py::none(), py::arg("workers") = 0);

  m.def(
      "ingest_csv",
      [](const std::filesystem::path& path, const std::string& target, std::uint64_t shuffle_seed,
         bool shuffle, bool drop_first_level) {
        harness::IngestOptions opts;
        opts.shuffle_seed = shuffle_seed;
        opts.shuffle = shuffle;
        opts.drop_first_level = drop_first_level;
        harness::IngestReport rep;
        const RegressionData data = harness::ingest_csv(path, target, opts, &rep);
        return py::dict(py::arg("X") = data.X, py::arg("y") = data.y,
                        py::arg("feature_names") = data.feature_names,
                        py::arg("rows_dropped") = rep.rows_dropped,
                        py::arg("warnings") = rep.warnings);
      },
      py::arg("path"), py::arg("target"), py::arg("shuffle_seed") = 0, py::arg("shuffle") = true,
      py::arg("drop_first_level") = false);
}
