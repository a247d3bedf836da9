#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "clipsgd/errors.hpp"

namespace clipsgd {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Dense real vector with finite entries.
///
/// Every constructor and every arithmetic operation verifies that the result
/// is finite and throws NonFiniteError otherwise. Binary operations require
/// equal dimensions and throw DimensionMismatch. There is deliberately no
/// mutable element access; use set() so the finiteness check cannot be
/// bypassed.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  Vector(std::initializer_list<double> entries);
  explicit Vector(std::vector<double> entries);

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }

  double operator[](std::size_t i) const { return v_[i]; }
  double at(std::size_t i) const { return v_.at(i); }
  void set(std::size_t i, double value);

  std::span<const double> values() const noexcept { return v_; }
  const std::vector<double>& std_vector() const noexcept { return v_; }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s);
  /// this += a * x
  Vector& axpy(double a, const Vector& x);

  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(Vector a, double s) { return a *= s; }
  friend Vector operator*(double s, Vector a) { return a *= s; }

  bool operator==(const Vector& other) const = default;

 private:
  void check_finite() const;
  std::vector<double> v_;
};

void require_same_dimension(const Vector& a, const Vector& b);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double distance(const Vector& a, const Vector& b);

/// Euclidean projection of x onto the ball B(center, radius). radius may be
/// +infinity, in which case x is returned unchanged.
Vector project_ball(const Vector& x, const Vector& center, double radius);

/// log_+(v) = 2 + ln(v). Throws DomainError for v <= 0.
double log_plus(double v);

/// Problem constants shared by every method.
struct Scalars {
  double L0 = 0.0;
  double L1 = 0.0;
  double sigma = 0.0;
  double delta = 0.05;
  std::uint64_t T = 1;
  double R0 = 1.0;
  double R = kInfinity;

  /// Throws DomainError when an invariant is violated.
  void validate() const;
};

}  // namespace clipsgd
