#include <gtest/gtest.h>

#include <cmath>

#include "clipsgd/core.hpp"
#include "clipsgd/random.hpp"

using namespace clipsgd;

TEST(Vector, RejectsNonFiniteEntries) {
  EXPECT_THROW(Vector({1.0, NAN}), NonFiniteError);
  EXPECT_THROW(Vector(3, INFINITY), NonFiniteError);
  Vector v{1.0, 2.0};
  EXPECT_THROW(v.set(0, NAN), NonFiniteError);
  EXPECT_THROW(v *= 1e308 * 10.0, NonFiniteError);
  Vector big{1e308};
  EXPECT_THROW(big += Vector{1e308}, NonFiniteError);
}

TEST(Vector, DimensionMismatchThrows) {
  EXPECT_THROW(dot(Vector{1.0}, Vector{1.0, 2.0}), DimensionMismatch);
  EXPECT_THROW((Vector{1.0} + Vector{1.0, 2.0}), DimensionMismatch);
  EXPECT_THROW(distance(Vector{1.0}, Vector{1.0, 2.0}), DimensionMismatch);
}

TEST(Vector, Arithmetic) {
  Vector a{1.0, 2.0}, b{3.0, 4.0};
  EXPECT_EQ(a + b, (Vector{4.0, 6.0}));
  EXPECT_EQ(b - a, (Vector{2.0, 2.0}));
  EXPECT_EQ(2.0 * a, (Vector{2.0, 4.0}));
  a.axpy(-1.0, b);
  EXPECT_EQ(a, (Vector{-2.0, -2.0}));
}

TEST(Dot, HandExamples) {
  EXPECT_EQ(dot(Vector{1.0, 0.0}, Vector{0.0, 1.0}), 0.0);
  EXPECT_EQ(dot(Vector{1.0, 2.0}, Vector{3.0, 4.0}), 11.0);
}

TEST(Norm, HandExamples) {
  EXPECT_EQ(norm(Vector{0.0, 0.0, 0.0}), 0.0);
  EXPECT_EQ(norm(Vector{3.0, 4.0}), 5.0);
}

TEST(Norm, AgreesWithIndependentSum) {
  RandomStream s(1, 2);
  for (int k = 0; k < 50; ++k) {
    const Vector v = draw_standard_normal(s, 17);
    double sq = 0.0;
    for (double x : v) sq += x * x;
    EXPECT_NEAR(dot(v, v), sq, 1e-12 * sq);
    EXPECT_NEAR(norm(v), std::sqrt(sq), 1e-12 * std::sqrt(sq));
  }
}

TEST(ProjectBall, Examples) {
  EXPECT_EQ(project_ball(Vector{2.0, 0.0}, Vector{0.0, 0.0}, 1.0), (Vector{1.0, 0.0}));
  EXPECT_EQ(project_ball(Vector{0.5, 0.0}, Vector{0.0, 0.0}, 1.0), (Vector{0.5, 0.0}));
  const Vector x{1e9, -3.0};
  EXPECT_EQ(project_ball(x, Vector{5.0, 5.0}, kInfinity), x);
  EXPECT_THROW(project_ball(x, Vector{0.0, 0.0}, 0.0), DomainError);
}

TEST(ProjectBall, IdempotentAndInside) {
  RandomStream s(3, 4);
  for (int k = 0; k < 1000; ++k) {
    const Vector c = draw_standard_normal(s, 5);
    Vector x = draw_standard_normal(s, 5);
    x *= 10.0;
    const double r = 0.1 + s.uniform();
    const Vector p = project_ball(x, c, r);
    EXPECT_LE(distance(p, c), r);
    EXPECT_EQ(project_ball(p, c, r), p);
  }
}

TEST(LogPlus, Examples) {
  EXPECT_EQ(log_plus(1.0), 2.0);
  EXPECT_NEAR(log_plus(std::exp(1.0)), 3.0, 1e-15);
  EXPECT_NEAR(log_plus(20000.0), 11.9035, 1e-4);
  EXPECT_THROW(log_plus(0.0), DomainError);
  EXPECT_THROW(log_plus(-1.0), DomainError);
}

TEST(Scalars, Validation) {
  Scalars s{1.0, 1.0, 0.0, 0.05, 10, 1.0};
  EXPECT_NO_THROW(s.validate());
  Scalars bad = s;
  bad.delta = 1.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.R0 = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.R = 0.5;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.T = 0;
  EXPECT_THROW(bad.validate(), DomainError);
}
