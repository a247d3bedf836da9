#pragma once

#include <optional>
#include <string>

#include "clipsgd/core.hpp"

namespace clipsgd {

enum class Variant {
  standard,
  implicit,
  conservative,
  adaptive,
  adaptive_conservative,
  plain_sgd,
  plain_adaptive,
};

/// theory: the closed-form step size times lr_scale.
/// direct: lr_scale is the learning rate itself. Fixed-step variants use
/// eta = lr, adaptive variants eta = lr / sqrt(sum alpha^2 |g|^2), and the
/// implicit variant eta = lr * c / (c + |g_tilde|).
enum class StepMode { theory, direct };

/// Implicit-variant rule in theory mode. `smoothed` multiplies the
/// standard-variant step by c / (c + |g_tilde|).
enum class ImplicitRule { theory, smoothed };

struct MethodConfig {
  Variant variant = Variant::standard;
  Scalars scalars;
  /// Noise scale entering the formulas (see effective_sigma).
  double sigma_prime = 0.0;
  double lr_scale = 1.0;
  std::optional<double> threshold_override;
  StepMode mode = StepMode::theory;
  ImplicitRule implicit_rule = ImplicitRule::theory;
  /// Adaptive rows sum alpha_i^2 |g_i|^2 for i = 0..t when true, 0..t-1
  /// when false.
  bool adaptive_include_current = true;

  /// Throws DomainError/ConfigError on inconsistent settings.
  void validate() const;
};

bool is_adaptive(Variant v);
/// alpha_t = min{1, c/|g_tilde|}; false for implicit and plain variants.
bool uses_clip_factor(Variant v);
/// Plain baselines average over all iterates.
bool is_plain(Variant v);

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);
const char* to_string(StepMode m);
StepMode parse_step_mode(const std::string& name);

/// min{1, c/n}; 1 when n = 0.
double clip_factor(double g_tilde_norm, double c);

/// Threshold c of the variant. Honors threshold_override. Plain variants
/// use their clipped counterpart's formula, or +inf when L1 = 0.
double threshold(const MethodConfig& config);

struct StepState {
  double adagrad_accumulator = 0.0;
  std::uint64_t iteration = 0;
};

struct StepScale {
  double eta = 0.0;
  double alpha = 1.0;
};

/// (eta_t, alpha_t) for the given g_tilde norm. For adaptive variants the
/// state must already hold the sum the step should use.
StepScale step_scale(const MethodConfig& config, double g_tilde_norm, const StepState& state);

/// Caches the threshold and constant parts of the step size for use in a
/// run loop.
class StepRule {
 public:
  explicit StepRule(const MethodConfig& config);

  double c() const noexcept { return c_; }
  bool clipped(double g_tilde_norm) const noexcept { return c_ <= g_tilde_norm; }
  double alpha(double g_tilde_norm) const noexcept;
  /// Step size for iteration t. For adaptive variants this folds
  /// alpha^2 |g|^2 into the state according to adaptive_include_current.
  double eta(double g_tilde_norm, double alpha, double g_norm, StepState& state) const;

  const MethodConfig& config() const noexcept { return config_; }

 private:
  MethodConfig config_;
  double c_;
  double base_eta_ = 0.0;  // fixed-step variants
  double implicit_offset_ = 0.0;
};

struct HierarchyResult {
  double conservative = 0.0;
  double standard = 0.0;
  double implicit = 0.0;
  bool precondition_met = false;
  bool ordered = false;
};

/// eta * alpha of the conservative, standard and implicit variants at the
/// same g_tilde norm, and whether they are ordered. The ordering is only
/// guaranteed when 2 log_+(T/delta) (64 L1 R0)^2 <= T.
HierarchyResult stepsize_hierarchy_check(double L0, double L1, double sigma_prime,
                                         std::uint64_t T, double delta, double R0,
                                         double g_tilde_norm);

}  // namespace clipsgd
