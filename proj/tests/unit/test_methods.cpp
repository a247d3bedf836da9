#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "clipsgd/methods.hpp"
#include "clipsgd/random.hpp"

using namespace clipsgd;

namespace {

MethodConfig config(Variant v, double L0, double L1, double sp, std::uint64_t T, double R0,
                    double delta = 0.05) {
  MethodConfig c;
  c.variant = v;
  c.scalars.L0 = L0;
  c.scalars.L1 = L1;
  c.scalars.T = T;
  c.scalars.R0 = R0;
  c.scalars.delta = delta;
  c.sigma_prime = sp;
  if (is_adaptive(v)) c.scalars.R = 2.0 * R0;
  return c;
}

// Step and threshold formulas written out independently of the library.
double oracle_standard_eta(double L0, double sp, double T, double R0) {
  return std::min(1.0 / (11.0 * L0), 1.0 / (L0 + sp * std::sqrt(T) / R0)) / 16.0;
}
double oracle_inner(double L0, double sp, double T, double radius) {
  return std::max(10.0 * L0, std::sqrt(T) * sp / radius);
}

}  // namespace

TEST(ClipFactor, Examples) {
  EXPECT_EQ(clip_factor(5.0, 10.0), 1.0);
  EXPECT_EQ(clip_factor(20.0, 10.0), 0.5);
  EXPECT_EQ(clip_factor(0.0, 10.0), 1.0);
  EXPECT_EQ(clip_factor(10.0, 10.0), 1.0);
  EXPECT_THROW(clip_factor(1.0, 0.0), DomainError);
}

TEST(ClipFactor, Properties) {
  RandomStream s(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double n = 100.0 * s.uniform(), c = 50.0 * s.uniform(), k = 10.0 * s.uniform();
    const double a = clip_factor(n, c);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_LE(clip_factor(n * 1.5, c), a);
    EXPECT_NEAR(clip_factor(k * n, k * c), a, 1e-15);
    if (a < 1.0) EXPECT_NEAR(a * n, c, 2.0 * std::numeric_limits<double>::epsilon() * c);
  }
}

TEST(Threshold, Examples) {
  EXPECT_EQ(threshold(config(Variant::standard, 1, 1, 0, 100, 1)), 10.0);
  const double c = threshold(config(Variant::conservative, 1, 1, 0, 4000000, 10));
  EXPECT_NEAR(c, 14.38, 0.005);
  EXPECT_NEAR(c, 64.0 * std::sqrt(2.0 + std::log(8e7)) * (10.0 / 2000.0) * 10.0, 1e-12);
  // sqrt(T) sigma' / R0 = 100 with T = 10^4, R0 = 1, sigma' = 1
  EXPECT_DOUBLE_EQ(threshold(config(Variant::standard, 1, 2, 1.0, 10000, 1)), 50.0);
}

TEST(Threshold, AllRowsAgainstIndependentFormulas) {
  RandomStream s(2, 0);
  for (int i = 0; i < 2000; ++i) {
    const double L0 = 0.1 + 10 * s.uniform(), L1 = 0.01 + s.uniform(), sp = 5 * s.uniform();
    const double R0 = 0.1 + 10 * s.uniform();
    const std::uint64_t T = 1 + s.uniform_index(1000000);
    const double delta = 0.01 + 0.5 * s.uniform();
    const double Td = static_cast<double>(T);
    const double lp = 2.0 + std::log(Td / delta);
    const double R = 2.0 * R0;
    auto rel = [](double a, double b) { return std::abs(a - b) / b; };
    EXPECT_LT(rel(threshold(config(Variant::standard, L0, L1, sp, T, R0, delta)),
                  oracle_inner(L0, sp, Td, R0) / L1), 1e-14);
    EXPECT_LT(rel(threshold(config(Variant::implicit, L0, L1, sp, T, R0, delta)),
                  oracle_inner(L0, sp, Td, R0) / L1), 1e-14);
    EXPECT_LT(rel(threshold(config(Variant::conservative, L0, L1, sp, T, R0, delta)),
                  64 * std::sqrt(lp) * R0 / std::sqrt(Td) * oracle_inner(L0, sp, Td, R0)), 1e-13);
    EXPECT_LT(rel(threshold(config(Variant::adaptive, L0, L1, sp, T, R0, delta)),
                  oracle_inner(L0, sp, Td, R) / L1), 1e-14);
    EXPECT_LT(rel(threshold(config(Variant::adaptive_conservative, L0, L1, sp, T, R0, delta)),
                  15 * std::sqrt(lp) * R / std::sqrt(Td) * oracle_inner(L0, sp, Td, R)), 1e-13);
  }
}

TEST(Threshold, OverrideAndErrors) {
  auto c = config(Variant::standard, 1, 1, 0, 100, 1);
  c.threshold_override = 3.5;
  EXPECT_EQ(threshold(c), 3.5);
  EXPECT_THROW(threshold(config(Variant::standard, 1, 0, 0, 100, 1)), DomainError);
  EXPECT_EQ(threshold(config(Variant::plain_sgd, 1, 0, 0, 100, 1)), kInfinity);
  // The conservative row does not divide by L1.
  EXPECT_GT(threshold(config(Variant::conservative, 1, 0, 0, 100, 1)), 0.0);
}

TEST(StepScale, Examples) {
  StepState st;
  const auto s = step_scale(config(Variant::standard, 1, 1, 0, 100, 1), 3.0, st);
  EXPECT_DOUBLE_EQ(s.eta, 1.0 / 176.0);
  EXPECT_EQ(s.alpha, 1.0);
  const auto im = step_scale(config(Variant::implicit, 1, 1, 0, 100, 1), 7.0, st);
  EXPECT_DOUBLE_EQ(im.eta, 0.015625);
  EXPECT_EQ(im.alpha, 1.0);
}

TEST(StepScale, AdaptiveFirstStep) {
  auto cfg = config(Variant::adaptive, 1, 1, 0, 100, 1);
  cfg.scalars.R = 1.0;
  const StepRule rule(cfg);
  StepState st;
  EXPECT_DOUBLE_EQ(rule.eta(0.5, 1.0, 2.0, st), 0.5);
  EXPECT_DOUBLE_EQ(st.adagrad_accumulator, 4.0);
  // Second step folds alpha^2 |g|^2 = 0.25 * 36 = 9 into the sum.
  EXPECT_DOUBLE_EQ(rule.eta(20.0, 0.5, 6.0, st), 1.0 / std::sqrt(13.0));
  StepState zero;
  EXPECT_EQ(rule.eta(0.0, 1.0, 0.0, zero), 0.0);
}

TEST(StepScale, AdaptiveExcludingCurrent) {
  auto cfg = config(Variant::plain_adaptive, 1, 1, 0, 100, 1);
  cfg.scalars.R = 1.0;
  cfg.adaptive_include_current = false;
  const StepRule rule(cfg);
  StepState st;
  EXPECT_EQ(rule.eta(0.0, 1.0, 2.0, st), 0.0);
  EXPECT_DOUBLE_EQ(rule.eta(0.0, 1.0, 3.0, st), 0.5);
}

TEST(StepScale, FixedRowsAgainstIndependentFormulas) {
  RandomStream s(3, 0);
  for (int i = 0; i < 2000; ++i) {
    const double L0 = 0.1 + 10 * s.uniform(), L1 = 0.01 + s.uniform(), sp = 5 * s.uniform();
    const double R0 = 0.1 + 10 * s.uniform(), g = 100 * s.uniform(), lr = 0.1 + s.uniform();
    const std::uint64_t T = 1 + s.uniform_index(1000000);
    const double Td = static_cast<double>(T);
    StepState st;
    for (Variant v : {Variant::standard, Variant::conservative}) {
      auto cfg = config(v, L0, L1, sp, T, R0);
      cfg.lr_scale = lr;
      const auto out = step_scale(cfg, g, st);
      EXPECT_NEAR(out.eta, lr * oracle_standard_eta(L0, sp, Td, R0), 1e-14 * out.eta);
      EXPECT_EQ(out.alpha, std::min(1.0, threshold(cfg) / g));
    }
    auto cfg = config(Variant::implicit, L0, L1, sp, T, R0);
    cfg.lr_scale = lr;
    const auto im = step_scale(cfg, g, st);
    EXPECT_NEAR(im.eta, lr * 0.125 / (L0 + g * L1 + sp * std::sqrt(Td) / R0), 1e-14 * im.eta);
    EXPECT_EQ(im.alpha, 1.0);
    // Bounded effective implicit step.
    EXPECT_LE(im.eta * g, lr * 0.125 / L1 * (1 + 1e-15));
  }
}

TEST(StepScale, ClippedMagnitudeEqualsEtaTimesC) {
  const auto cfg = config(Variant::standard, 1, 1, 0, 100, 1);
  StepState st;
  for (double g : {10.0, 11.0, 1e3, 1e9}) {
    const auto out = step_scale(cfg, g, st);
    EXPECT_NEAR(out.eta * out.alpha * g, out.eta * 10.0, 4 * std::numeric_limits<double>::epsilon() * out.eta * 10.0);
  }
}

TEST(StepScale, DirectMode) {
  auto cfg = config(Variant::implicit, 1, 1, 0, 100, 1);
  cfg.mode = StepMode::direct;
  cfg.lr_scale = 0.3;
  cfg.threshold_override = 2.0;
  StepState st;
  EXPECT_DOUBLE_EQ(step_scale(cfg, 6.0, st).eta, 0.3 * 2.0 / 8.0);
  cfg.variant = Variant::standard;
  EXPECT_DOUBLE_EQ(step_scale(cfg, 6.0, st).eta, 0.3);
  EXPECT_DOUBLE_EQ(step_scale(cfg, 6.0, st).alpha, 1.0 / 3.0);
}

TEST(StepRule, ClippedBoundaryBelongsToT1) {
  const StepRule rule(config(Variant::standard, 1, 1, 0, 100, 1));
  EXPECT_TRUE(rule.clipped(10.0));
  EXPECT_EQ(rule.alpha(10.0), 1.0);
  EXPECT_FALSE(rule.clipped(std::nextafter(10.0, 0.0)));
  EXPECT_FALSE(rule.clipped(0.0));
}

TEST(Hierarchy, SweepSmallL1) {
  const double c = threshold(config(Variant::standard, 1, 0.001, 0, 1000000, 1));
  for (int i = 0; i <= 1000; ++i) {
    const double g = 10.0 * c * i / 1000.0;
    const auto h = stepsize_hierarchy_check(1, 0.001, 0, 1000000, 0.05, 1, g);
    EXPECT_TRUE(h.precondition_met);
    EXPECT_TRUE(h.ordered) << g;
  }
}

TEST(Hierarchy, ZeroGradient) {
  const auto h = stepsize_hierarchy_check(1, 0.001, 0.5, 1000000, 0.05, 1, 0.0);
  const double offset = 1.0 + 0.5 * 1000.0;
  EXPECT_DOUBLE_EQ(h.standard, h.conservative);
  EXPECT_NEAR(h.implicit, 1.0 / (8.0 * offset), 1e-15);
  EXPECT_LE(h.standard, h.implicit);
}

TEST(Parsing, RoundTrip) {
  for (Variant v : {Variant::standard, Variant::implicit, Variant::conservative, Variant::adaptive,
                    Variant::adaptive_conservative, Variant::plain_sgd, Variant::plain_adaptive}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("momentum"), ConfigError);
}

TEST(MethodConfig, AdaptiveNeedsFiniteR) {
  auto cfg = config(Variant::adaptive, 1, 1, 0, 10, 1);
  EXPECT_NO_THROW(cfg.validate());
  cfg.scalars.R = kInfinity;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
