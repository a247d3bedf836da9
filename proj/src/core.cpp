#include "clipsgd/core.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace clipsgd {

Vector::Vector(std::size_t dim, double fill) : v_(dim, fill) { check_finite(); }

Vector::Vector(std::initializer_list<double> entries) : v_(entries) {
  check_finite();
}

Vector::Vector(std::vector<double> entries) : v_(std::move(entries)) {
  check_finite();
}

void Vector::set(std::size_t i, double value) {
  if (!std::isfinite(value)) {
    throw NonFiniteError("Vector::set: non-finite value at index " +
                         std::to_string(i));
  }
  v_.at(i) = value;
}

void Vector::check_finite() const {
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (!std::isfinite(v_[i])) {
      throw NonFiniteError("non-finite vector entry at index " +
                           std::to_string(i));
    }
  }
}

void require_same_dimension(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dimension mismatch: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dimension(*this, other);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += other.v_[i];
  check_finite();
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dimension(*this, other);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= other.v_[i];
  check_finite();
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& x : v_) x *= s;
  check_finite();
  return *this;
}

Vector& Vector::axpy(double a, const Vector& x) {
  require_same_dimension(*this, x);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
  check_finite();
  return *this;
}

double dot(const Vector& a, const Vector& b) {
  require_same_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double distance(const Vector& a, const Vector& b) {
  require_same_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vector project_ball(const Vector& x, const Vector& center, double radius) {
  require_same_dimension(x, center);
  if (!(radius > 0.0)) {
    throw DomainError("project_ball: radius must be positive");
  }
  if (std::isinf(radius)) return x;
  const double dist = distance(x, center);
  if (dist <= radius) return x;
  // center + radius * (x - center) / dist, computed per entry.
  // The rounded result must land inside the ball so that projecting it again
  // is the identity. Shrink the scale from one ulp upward until it does.
  double scale = radius / dist;
  std::vector<double> out(x.size());
  for (int attempt = 0; attempt < 64; ++attempt) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = center[i] + scale * (x[i] - center[i]);
      const double d = out[i] - center[i];
      s2 += d * d;
    }
    if (std::sqrt(s2) <= radius) break;
    scale *= 1.0 - std::ldexp(1.0, attempt - 52);
  }
  return Vector(std::move(out));
}

double log_plus(double v) {
  if (!(v > 0.0)) throw DomainError("log_plus: argument must be positive");
  return 2.0 + std::log(v);
}

void Scalars::validate() const {
  if (!(L0 >= 0.0) || !std::isfinite(L0)) throw DomainError("L0 must be finite and >= 0");
  if (!(L1 >= 0.0) || !std::isfinite(L1)) throw DomainError("L1 must be finite and >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be finite and >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  if (T < 1) throw DomainError("T must be >= 1");
  if (!(R0 > 0.0) || !std::isfinite(R0)) throw DomainError("R0 must be finite and > 0");
  if (!(R > 0.0)) throw DomainError("R must be > 0 or +inf");
  if (std::isfinite(R) && R < R0) throw DomainError("R must be >= R0");
}

}  // namespace clipsgd
