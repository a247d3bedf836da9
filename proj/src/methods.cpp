#include "clipsgd/methods.hpp"

#include <algorithm>
#include <cmath>

namespace clipsgd {

namespace {

double sqrt_T(const Scalars& s) { return std::sqrt(static_cast<double>(s.T)); }

// max{10 L0, sqrt(T) sigma' / radius}
double noise_or_smoothness(const Scalars& s, double sigma_prime, double radius) {
  return std::max(10.0 * s.L0, sqrt_T(s) * sigma_prime / radius);
}

double formula_threshold(Variant v, const Scalars& s, double sp) {
  const double lp = log_plus(static_cast<double>(s.T) / s.delta);
  switch (v) {
    case Variant::standard:
    case Variant::implicit:
    case Variant::plain_sgd:
      if (s.L1 == 0.0) {
        if (v == Variant::plain_sgd) return kInfinity;
        throw DomainError("threshold: L1 = 0 is not allowed for this variant");
      }
      return noise_or_smoothness(s, sp, s.R0) / s.L1;
    case Variant::conservative:
      return 64.0 * std::sqrt(lp) * (s.R0 / sqrt_T(s)) * noise_or_smoothness(s, sp, s.R0);
    case Variant::adaptive:
    case Variant::plain_adaptive:
      if (s.L1 == 0.0) {
        if (v == Variant::plain_adaptive) return kInfinity;
        throw DomainError("threshold: L1 = 0 is not allowed for this variant");
      }
      return noise_or_smoothness(s, sp, s.R) / s.L1;
    case Variant::adaptive_conservative:
      return 15.0 * std::sqrt(lp) * (s.R / sqrt_T(s)) * noise_or_smoothness(s, sp, s.R);
  }
  return kInfinity;
}

// (1/16) min{1/(11 L0), 1/(L0 + sigma' sqrt(T)/R0)}
double standard_eta(const Scalars& s, double sp) {
  const double a = 1.0 / (11.0 * s.L0);
  const double b = 1.0 / (s.L0 + sp * sqrt_T(s) / s.R0);
  const double eta = std::min(a, b) / 16.0;
  if (!std::isfinite(eta)) {
    throw DomainError("step size undefined: L0 and sigma' are both zero");
  }
  return eta;
}

}  // namespace

bool is_adaptive(Variant v) {
  return v == Variant::adaptive || v == Variant::adaptive_conservative ||
         v == Variant::plain_adaptive;
}

bool uses_clip_factor(Variant v) {
  return v == Variant::standard || v == Variant::conservative || v == Variant::adaptive ||
         v == Variant::adaptive_conservative;
}

bool is_plain(Variant v) { return v == Variant::plain_sgd || v == Variant::plain_adaptive; }

const char* to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::implicit: return "implicit";
    case Variant::conservative: return "conservative";
    case Variant::adaptive: return "adaptive";
    case Variant::adaptive_conservative: return "adaptive_conservative";
    case Variant::plain_sgd: return "plain_sgd";
    case Variant::plain_adaptive: return "plain_adaptive";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::standard, Variant::implicit, Variant::conservative,
                    Variant::adaptive, Variant::adaptive_conservative, Variant::plain_sgd,
                    Variant::plain_adaptive}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown method: " + name);
}

const char* to_string(StepMode m) { return m == StepMode::theory ? "theory" : "direct"; }

StepMode parse_step_mode(const std::string& name) {
  if (name == "theory") return StepMode::theory;
  if (name == "direct") return StepMode::direct;
  throw ConfigError("unknown step mode: " + name);
}

void MethodConfig::validate() const {
  scalars.validate();
  if (!(sigma_prime >= 0.0) || !std::isfinite(sigma_prime)) {
    throw DomainError("sigma_prime must be finite and >= 0");
  }
  if (!(lr_scale > 0.0) || !std::isfinite(lr_scale)) {
    throw DomainError("lr_scale must be finite and > 0");
  }
  if (threshold_override && !(*threshold_override > 0.0)) {
    throw DomainError("threshold override must be > 0");
  }
  if (is_adaptive(variant) && !std::isfinite(scalars.R)) {
    throw ConfigError(std::string(to_string(variant)) + " requires a finite R");
  }
}

double clip_factor(double g_tilde_norm, double c) {
  if (!(c > 0.0)) throw DomainError("clip_factor: c must be positive");
  if (g_tilde_norm <= c) return 1.0;
  return c / g_tilde_norm;
}

double threshold(const MethodConfig& config) {
  if (config.threshold_override) return *config.threshold_override;
  const double c = formula_threshold(config.variant, config.scalars, config.sigma_prime);
  if (!(c > 0.0)) {
    throw DomainError("threshold is zero: L0 and sigma' are both zero");
  }
  return c;
}

StepScale step_scale(const MethodConfig& config, double g_tilde_norm, const StepState& state) {
  // The state already holds the sum this step uses, so nothing is folded in.
  MethodConfig passive = config;
  passive.adaptive_include_current = false;
  const StepRule rule(passive);
  StepState copy = state;
  const double alpha = rule.alpha(g_tilde_norm);
  return {rule.eta(g_tilde_norm, alpha, 0.0, copy), alpha};
}

StepRule::StepRule(const MethodConfig& config) : config_(config), c_(threshold(config)) {
  config_.validate();
  const Scalars& s = config_.scalars;
  if (config_.mode == StepMode::direct) {
    base_eta_ = config_.lr_scale;
    return;
  }
  switch (config_.variant) {
    case Variant::standard:
    case Variant::conservative:
    case Variant::plain_sgd:
      base_eta_ = config_.lr_scale * standard_eta(s, config_.sigma_prime);
      break;
    case Variant::implicit:
      if (config_.implicit_rule == ImplicitRule::smoothed) {
        base_eta_ = config_.lr_scale * standard_eta(s, config_.sigma_prime);
      } else {
        implicit_offset_ = s.L0 + config_.sigma_prime * sqrt_T(s) / s.R0;
        base_eta_ = config_.lr_scale / 8.0;
      }
      break;
    case Variant::adaptive:
    case Variant::adaptive_conservative:
    case Variant::plain_adaptive:
      base_eta_ = config_.lr_scale * s.R;
      break;
  }
}

double StepRule::alpha(double g_tilde_norm) const noexcept {
  if (!uses_clip_factor(config_.variant)) return 1.0;
  return g_tilde_norm <= c_ ? 1.0 : c_ / g_tilde_norm;
}

double StepRule::eta(double g_tilde_norm, double alpha, double g_norm, StepState& state) const {
  const Variant v = config_.variant;
  double eta = 0.0;
  if (is_adaptive(v)) {
    const double term = alpha * alpha * g_norm * g_norm;
    if (config_.adaptive_include_current) state.adagrad_accumulator += term;
    const double acc = state.adagrad_accumulator;
    eta = acc > 0.0 ? base_eta_ / std::sqrt(acc) : 0.0;
    if (!config_.adaptive_include_current) state.adagrad_accumulator += term;
  } else if (v == Variant::implicit) {
    if (config_.mode == StepMode::direct || config_.implicit_rule == ImplicitRule::smoothed) {
      eta = base_eta_ * c_ / (c_ + g_tilde_norm);
    } else {
      const double denom = implicit_offset_ + g_tilde_norm * config_.scalars.L1;
      if (!(denom > 0.0)) throw DomainError("implicit step size undefined at this point");
      eta = base_eta_ / denom;
    }
  } else {
    eta = base_eta_;
  }
  ++state.iteration;
  return eta;
}

HierarchyResult stepsize_hierarchy_check(double L0, double L1, double sigma_prime,
                                         std::uint64_t T, double delta, double R0,
                                         double g_tilde_norm) {
  MethodConfig cfg;
  cfg.scalars.L0 = L0;
  cfg.scalars.L1 = L1;
  cfg.scalars.T = T;
  cfg.scalars.delta = delta;
  cfg.scalars.R0 = R0;
  cfg.sigma_prime = sigma_prime;

  HierarchyResult out;
  const double lp = log_plus(static_cast<double>(T) / delta);
  const double k = 64.0 * L1 * R0;
  out.precondition_met = 2.0 * lp * k * k <= static_cast<double>(T);

  auto eta_alpha = [&](Variant v) {
    cfg.variant = v;
    StepRule rule(cfg);
    StepState st;
    const double a = rule.alpha(g_tilde_norm);
    return rule.eta(g_tilde_norm, a, 0.0, st) * a;
  };
  out.conservative = eta_alpha(Variant::conservative);
  out.standard = eta_alpha(Variant::standard);
  out.implicit = eta_alpha(Variant::implicit);
  out.ordered = out.conservative <= out.standard && out.standard <= out.implicit;
  return out;
}

}  // namespace clipsgd
