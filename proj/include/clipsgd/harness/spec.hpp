#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clipsgd/methods.hpp"
#include "clipsgd/oracles.hpp"
#include "clipsgd/runner.hpp"

namespace clipsgd::harness {

struct ObjectiveSpec {
  /// cosh | quadratic | quartic_synthetic | quartic_regression
  std::string type = "quartic_synthetic";
  double L0 = 1.0;  // cosh
  double L1 = 1.0;  // cosh
  std::size_t dim = 20;
  /// quartic_synthetic diagonal; empty means (1/d, ..., 1).
  std::vector<double> diag;
  /// quartic_regression
  std::filesystem::path csv;
  std::string target;
  std::optional<std::uint64_t> shuffle_seed;
  std::size_t batch = 1;
  bool drop_first_level = true;
  /// Certification radius around x_star; default 2 |x0 - x_star|.
  std::optional<double> certify_radius;
  std::size_t certify_samples = 10000;
};

struct NoiseSpec {
  /// none | bounded | sub_gaussian | gaussian (norm variance)
  std::string kind = "none";
  double sigma = 0.0;
  double norm_variance = 0.0;
};

struct TunerSpec {
  std::vector<double> lr_values;
  std::vector<double> c_values;
  std::vector<double> refine = {0.25, 0.5, 1.0, 2.0, 4.0};
  int max_extensions = 3;
  /// Seeds for tuning; empty means the experiment seeds.
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> T;  // tuning horizon; default: experiment T
};

struct MethodSpec {
  std::string label;
  Variant variant = Variant::standard;
  Sampling sampling = Sampling::double_sample;
  std::optional<Averaging> averaging;
  StepMode mode = StepMode::theory;
  ImplicitRule implicit_rule = ImplicitRule::theory;
  double lr_scale = 1.0;
  std::optional<double> threshold;
  /// Domain radius; nullopt means +inf for non-adaptive variants and
  /// 2 |x0 - x_star| for adaptive ones.
  std::optional<double> R;
  bool adaptive_include_current = true;
  std::optional<TunerSpec> tuner;
};

enum class Budget { equal_iterations, equal_oracle_calls };

struct ExperimentSpec {
  std::string name;
  ObjectiveSpec objective;
  NoiseSpec noise;
  /// Starting point: explicit vector, or x0_fill repeated to the dimension.
  std::vector<double> x0;
  std::optional<double> x0_fill;
  std::uint64_t T = 1000;
  double delta = 0.05;
  std::vector<std::uint64_t> seeds;
  std::uint64_t record_every = 1;
  unsigned workers = 0;
  Budget budget = Budget::equal_iterations;
  /// Factor in front of sigma sqrt(ln(T/delta)) for sub-Gaussian noise.
  double sigma_prime_factor = 3.0;
  std::vector<MethodSpec> methods;
  std::optional<TunerSpec> tuner;  // default for every method
  std::filesystem::path output;
  bool checks = true;
  /// Directory of the spec file; relative paths resolve against it.
  std::filesystem::path base_dir;
};

ExperimentSpec parse_experiment_spec(const std::string& json_text,
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// JSON schema of the spec format.
const std::string& experiment_spec_schema();

const char* to_string(Budget b);

}  // namespace clipsgd::harness
