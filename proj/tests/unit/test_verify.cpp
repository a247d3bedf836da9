#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "clipsgd/objectives.hpp"
#include "clipsgd/oracles.hpp"
#include "clipsgd/runner.hpp"
#include "clipsgd/verify.hpp"

using namespace clipsgd;

TEST(SmoothnessLemmas, CoshHandValue) {
  const double x = 1.0;
  const double lhs = std::sinh(x) * std::sinh(x);
  const double rhs = 2.0 * (1.0 + std::sinh(x)) * (std::cosh(x) - 1.0);
  EXPECT_NEAR(lhs, 1.3811, 1e-4);
  EXPECT_NEAR(rhs, 2.3627, 1e-4);
  const auto rep = check_smoothness_lemmas(*make_cosh(1, 1), BallRegion{Vector{0.0}, 5.0}, 10000);
  EXPECT_TRUE(rep.passed()) << rep.details;
  EXPECT_EQ(rep.violations, 0u);
}

TEST(SmoothnessLemmas, CertifiedQuartic) {
  const BallRegion region{Vector(20, 0.0), 2.0 * 1.75 * std::sqrt(20.0)};
  const auto f = make_quartic_synthetic(harmonic_diagonal(20), region);
  const auto rep = check_smoothness_lemmas(*f, region, 10000, 77);
  EXPECT_TRUE(rep.passed()) << rep.details;
}

namespace {

// |x|^2 declared with constants (1, 0) although its Hessian norm is 2.
class UnderstatedQuadratic final : public Objective {
 public:
  UnderstatedQuadratic() {
    set_constants(1.0, 0.0);
    set_optimum(Vector{0.0, 0.0}, 0.0);
  }
  std::string name() const override { return "understated"; }
  std::size_t dimension() const override { return 2; }
  double value(const Vector& x) const override { return dot(x, x); }
  Vector gradient(const Vector& x) const override { return 2.0 * x; }
  std::optional<double> hessian_norm(const Vector&) const override { return 2.0; }
};

}  // namespace

TEST(SmoothnessLemmas, DetectsUnderstatedConstants) {
  const UnderstatedQuadratic f;
  const auto rep = check_smoothness_lemmas(f, BallRegion{Vector{0.0, 0.0}, 3.0}, 1000);
  EXPECT_TRUE(rep.failed());
  EXPECT_GT(rep.violations, 0u);
}

TEST(Hierarchy, RandomDraws) {
  const auto rep = check_stepsize_hierarchy(10000);
  EXPECT_TRUE(rep.passed()) << rep.details;
  EXPECT_EQ(rep.trials, 10000u);
}

TEST(Martingale, BoundValueAndFrequency) {
  EXPECT_NEAR(0.75 * 0.5 * 100 + std::log(20.0) / 0.5, 43.49, 0.005);
  for (auto sched : {MartingaleSchedule::rademacher, MartingaleSchedule::zero,
                     MartingaleSchedule::decaying}) {
    const auto rep = check_martingale_bound(100, 0.5, 0.05, 10000, sched);
    EXPECT_TRUE(rep.passed()) << rep.details;
  }
  const auto zero = check_martingale_bound(100, 0.5, 0.05, 1000, MartingaleSchedule::zero);
  EXPECT_EQ(zero.observed_frequency, 1.0);
}

TEST(MonteCarloSlack, Value) {
  EXPECT_NEAR(monte_carlo_slack(0.95, 10000), 3.0 * std::sqrt(0.95 * 0.05 / 10000), 1e-15);
}

TEST(TheoremBound, ConservativeCoshValue) {
  Scalars s{1.0, 1.0, 0.0, 0.05, 4000000, 10.0};
  const auto b = theorem_bound(Variant::conservative, s, 0.0);
  const double expected = 64.0 * (2.0 + std::log(4e6 / 0.05)) * 11.0 * 100.0 / 4e6;
  EXPECT_NEAR(b.value, expected, 1e-12);
  EXPECT_NEAR(b.value, 0.355477, 1e-6);
  EXPECT_FALSE(b.precondition_met);
}

TEST(TheoremBound, AdaptiveRow) {
  Scalars s{2.0, 0.5, 1.0, 0.1, 10000, 1.0, 3.0};
  const auto b = theorem_bound(Variant::adaptive, s, 1.0);
  const double expected = 50.0 * (15.0 * 2.0 * 9.0 + (2.0 + std::log(10.0)) * 3.0 * 100.0) / 10000.0;
  EXPECT_NEAR(b.value, expected, 1e-12);
}

TEST(Conditions, ClippedRate) {
  Scalars s{1.0, 1.0, 0.0, 0.05, 4000000, 10.0};
  EXPECT_FALSE(clipped_rate_condition(s));  // needs about 8.3e6 iterations
  s.R0 = 1.0;
  EXPECT_TRUE(clipped_rate_condition(s));
}

namespace {

RunConfig cosh_run(double x0, std::uint64_t T, NoiseModel noise, std::uint64_t seed) {
  RunConfig c;
  c.oracle = std::make_shared<NoisyOracle>(make_cosh(1, 1), noise, seed);
  c.x0 = Vector{x0};
  c.T = T;
  c.seed = seed;
  c.method.variant = Variant::conservative;
  c.method.scalars = Scalars{1.0, 1.0, noise.sigma, 0.05, T, std::abs(x0)};
  c.method.sigma_prime = effective_sigma(noise, T, 0.05);
  return c;
}

}  // namespace

TEST(ProgressClaim, SkippedWhenPreconditionUnmet) {
  const auto cfg = cosh_run(3.0, 100, NoiseModel::none(), 0);
  const auto rep = check_progress_claim(run(cfg), cfg.method.scalars, 0.0);
  EXPECT_EQ(rep.status, CheckStatus::skipped);
}

TEST(ProgressClaim, VacuousWhenNothingClipped) {
  auto cfg = cosh_run(0.01, 1000000, NoiseModel::none(), 0);
  cfg.method.scalars.R0 = 0.01;
  cfg.record_every = 1000000;
  const RunTrace tr = run(cfg);
  ASSERT_EQ(tr.T1_size, 0u);
  const auto rep = check_progress_claim(tr, cfg.method.scalars, 0.0);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.trials, 0u);
}

TEST(ProgressClaim, ClippedDeterministicRun) {
  // R0 = 3.5 satisfies the theorem condition at T = 1e6 and starts with
  // |cosh'(3.5)| = 16.5 above c = 13.9.
  auto cfg = cosh_run(3.5, 1000000, NoiseModel::none(), 0);
  cfg.record_every = 1000000;
  const RunTrace tr = run(cfg);
  ASSERT_TRUE(clipped_rate_condition(cfg.method.scalars));
  ASSERT_GT(tr.T1_size, 0u);
  const auto rep = check_progress_claim(tr, cfg.method.scalars, 0.0);
  EXPECT_TRUE(rep.passed()) << rep.details;
  EXPECT_EQ(rep.trials, tr.T1_size);
}

TEST(Telescoping, SingleStep) {
  RunConfig c;
  c.oracle = std::make_shared<NoisyOracle>(make_cosh(1, 1), NoiseModel::bounded(0.3), 1);
  c.x0 = Vector{2.0};
  c.T = 1;
  c.keep_vectors = true;
  c.method.variant = Variant::adaptive;
  c.method.scalars = Scalars{1.0, 1.0, 0.3, 0.05, 1, 2.0, 2.0};
  c.method.sigma_prime = 0.3;
  const RunTrace tr = run(c);
  const double lhs = tr.alphas[0] * tr.gs[0][0] * (tr.xs[0][0] - 0.0);
  const double rhs = 2.0 * 2.0 * tr.alphas[0] * std::abs(tr.gs[0][0]);
  EXPECT_LE(lhs, rhs);
  const auto rep = check_adaptive_telescoping(tr, Vector{0.0}, 2.0);
  EXPECT_TRUE(rep.passed()) << rep.details;
  EXPECT_EQ(rep.trials, 1u);
}

TEST(Telescoping, DetectsWrongRadius) {
  RunConfig c;
  c.oracle = std::make_shared<NoisyOracle>(make_cosh(1, 1), NoiseModel::none(), 1);
  c.x0 = Vector{2.0};
  c.T = 5;
  c.keep_vectors = true;
  c.method.variant = Variant::adaptive;
  c.method.scalars = Scalars{1.0, 1.0, 0.0, 0.05, 5, 2.0, 4.0};
  const RunTrace tr = run(c);
  EXPECT_TRUE(check_adaptive_telescoping(tr, Vector{0.0}, 0.1).failed());
}

TEST(Monotone, DeterministicConservativeCosh) {
  auto cfg = cosh_run(3.0, 2000, NoiseModel::none(), 0);
  const auto rep = check_monotone_gap(run(cfg));
  EXPECT_TRUE(rep.passed()) << rep.details;
}

TEST(OracleChecks, BoundedAndSubGaussian) {
  const auto f = make_quadratic(4);
  NoisyOracle b(f, NoiseModel::bounded(1.0), 3);
  EXPECT_TRUE(check_bounded_oracle(b, Vector(4, 1.0), 100000).passed());
  NoisyOracle g(f, NoiseModel::sub_gaussian(1.0, 4), 4);
  EXPECT_TRUE(check_subgaussian_moment(g, Vector(4, 1.0), 100000).passed());
  EXPECT_TRUE(check_unbiasedness(g, Vector(4, 1.0), 100000).passed());
}

TEST(GradientFd, Builtins) {
  EXPECT_TRUE(check_gradient_fd(*make_cosh(1, 1), BallRegion{Vector{0.0}, 5.0}, 100).passed());
  EXPECT_TRUE(check_gradient_fd(*make_quadratic(6), BallRegion{Vector(6, 0.0), 5.0}, 100).passed());
  const auto q = make_quartic_synthetic(harmonic_diagonal(20));
  EXPECT_TRUE(check_gradient_fd(*q, BallRegion{Vector(20, 1.75), 3.0}, 100).passed());
}

TEST(Claims, EnsembleFrequencies) {
  auto cfg = cosh_run(3.5, 20000, NoiseModel::bounded(0.05), 0);
  cfg.record_every = 20000;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const auto sum = run_ensemble(cfg, seeds);
  const auto t2 = check_t2_mass(sum, 0.9);
  const auto c1 = check_progress_sum(sum, cfg.method.scalars, 0.9);
  EXPECT_EQ(t2.trials, 20u);
  EXPECT_EQ(c1.trials, 20u);
  // Independent recount from the run outcomes.
  std::uint64_t ok_t2 = 0, ok_c1 = 0;
  const double bound = 2.0 * (2.0 + std::log(20000 / 0.05)) * 3.5 * 3.5;
  for (const auto& r : sum.runs) {
    ok_t2 += r.t2_fraction >= 0.5;
    ok_c1 += r.sum_eta_alpha_delta <= bound;
  }
  EXPECT_DOUBLE_EQ(t2.observed_frequency, ok_t2 / 20.0);
  EXPECT_DOUBLE_EQ(c1.observed_frequency, ok_c1 / 20.0);
}
