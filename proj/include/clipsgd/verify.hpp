#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clipsgd/core.hpp"
#include "clipsgd/methods.hpp"
#include "clipsgd/objectives.hpp"
#include "clipsgd/oracles.hpp"
#include "clipsgd/runner.hpp"

namespace clipsgd {

enum class CheckStatus { pass, fail, skipped };
const char* to_string(CheckStatus s);

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  std::uint64_t allowed_violations = 0;
  /// Most negative slack (rhs - lhs) observed; +inf with no trials.
  double worst_margin = kInfinity;
  /// For frequency checks: observed and required success frequency.
  double observed_frequency = 1.0;
  double required_frequency = 1.0;
  std::string details;

  bool passed() const { return status == CheckStatus::pass; }
  bool failed() const { return status == CheckStatus::fail; }
};

/// Three-standard-error slack for a Bernoulli frequency with success
/// probability p over n trials.
double monte_carlo_slack(double p, std::uint64_t n);

/// Evaluates at `samples` uniform points of `region` (plus the region
/// center and x_star when inside):
///   |hess f| <= L0 + L1 |grad f|
///   |grad f|^2 <= 2 (L0 + L1 |grad f|) (f - f*)
///   |grad f| <= max{3 L1 (f - f*), 6 L0 / L1}        (L1 > 0 only)
/// A violation is lhs > rhs + rel_slack * max(|lhs|, |rhs|). When the
/// reference optimum is inexact, |grad f(x_star)| is subtracted from
/// |grad f| on the left of the two gap-based inequalities.
CheckReport check_smoothness_lemmas(const Objective& obj, const BallRegion& region,
                                    std::size_t samples, std::uint64_t seed = 1,
                                    double rel_slack = 1e-9);

/// Random draws of (L0, L1, sigma', T, delta, R0, |g_tilde|) satisfying
/// 2 log_+(T/delta) (64 L1 R0)^2 <= T; counts draws where the
/// conservative <= standard <= implicit ordering of eta * alpha fails.
CheckReport check_stepsize_hierarchy(std::size_t draws, std::uint64_t seed = 2);

/// True iff T >= log_+(T/delta) (64 L1 R0)^2.
bool clipped_rate_condition(const Scalars& s);
/// Adaptive rows additionally need log_+(1/delta) (15 L1 R)^2 <= T.
bool adaptive_rate_condition(const Scalars& s);

/// eta_t alpha_t Delta_t >= 4 log_+(T/delta) R0^2 / T for every t in T1.
/// Skipped unless clipped_rate_condition holds and c >= 6 sigma'.
CheckReport check_progress_claim(const RunTrace& trace, const Scalars& scalars,
                                 double sigma_prime, double constant = 4.0);

/// Sum eta_t alpha_t Delta_t <= 2 log_+(T/delta) R0^2 in at least
/// `required` of the runs.
CheckReport check_progress_sum(const EnsembleSummary& summary, const Scalars& scalars,
                         double required);

/// |T2| >= T/2 in at least `required` of the runs.
CheckReport check_t2_mass(const EnsembleSummary& summary, double required);

enum class MartingaleSchedule { rademacher, zero, decaying };

/// Monte Carlo test of sum Z_t <= (3/4) lambda sum sigma_t^2 +
/// ln(1/delta)/lambda for Z_t = sigma_t * eps_t with Rademacher eps_t and
/// sigma_t = 1 (rademacher), 0 (zero) or 1/sqrt(t+1) (decaying). Passes
/// iff the holding frequency is >= 1 - delta - monte_carlo_slack.
CheckReport check_martingale_bound(std::uint64_t T, double lambda, double delta,
                                   std::uint64_t trials,
                                   MartingaleSchedule schedule = MartingaleSchedule::rademacher,
                                   std::uint64_t seed = 3);

/// sum_{i<=t} alpha_i <g_i, x_i - x*> <= 2R sqrt(sum_{i<=t} alpha_i^2 |g_i|^2)
/// for every prefix t (needs a trace with keep_vectors), or for the full
/// sum when only the running totals are available.
CheckReport check_adaptive_telescoping(const RunTrace& trace, const Vector& x_star,
                                       double R, double rel_slack = 1e-9);

struct TheoremBound {
  double value = 0.0;
  bool precondition_met = false;
  std::string formula;
};

/// Explicit bound of the convergence theorem matching the variant:
///   64 log_+(T/delta) (11 L0 R0^2 + sigma R0 sqrt(T)) / T
///   50 (15 L0 R^2 + log_+(1/delta) sigma R sqrt(T)) / T   (adaptive rows)
TheoremBound theorem_bound(Variant variant, const Scalars& scalars, double sigma);

/// Fraction of runs whose final gap is at most theorem_bound. Noise-free
/// runs (sigma = 0) must all pass; otherwise the required frequency is
/// 1 - delta (bounded) or 1 - 2 delta (sub-Gaussian) less monte_carlo_slack.
/// With enforce_precondition the check is skipped when the theorem's
/// T condition fails; otherwise it runs and the details note the failure.
CheckReport check_theorem_bound(const EnsembleSummary& summary, const Scalars& scalars,
                                Variant variant, const NoiseModel& noise, double sigma_prime,
                                bool enforce_precondition = true);

/// Bounded oracle: |sample - grad f(x)| <= sigma on every draw.
CheckReport check_bounded_oracle(GradientOracle& oracle, const Vector& x, std::uint64_t draws);

/// Sub-Gaussian oracle: mean exp(|xi|^2/sigma^2) <= e + 3 standard errors.
CheckReport check_subgaussian_moment(GradientOracle& oracle, const Vector& x,
                                     std::uint64_t draws);

/// Per-coordinate correlation of the two noise vectors of double_sample
/// within +-max_abs_corr.
CheckReport check_double_sample_independence(GradientOracle& oracle, const Vector& x,
                                             std::uint64_t pairs, double max_abs_corr = 0.01);

/// Per-coordinate sample mean within `z` standard errors of grad f(x).
CheckReport check_unbiasedness(GradientOracle& oracle, const Vector& x, std::uint64_t draws,
                               double z = 4.0);

/// Relative error |fd - grad| / max(|grad|, |fd|) <= tol at `points`
/// uniform points of `region`.
CheckReport check_gradient_fd(const Objective& obj, const BallRegion& region,
                              std::size_t points, double tol = 1e-5, std::uint64_t seed = 4);

/// Delta_{t+1} <= Delta_t over the recorded gaps (with rel_slack).
CheckReport check_monotone_gap(const RunTrace& trace, double rel_slack = 1e-12);

}  // namespace clipsgd
