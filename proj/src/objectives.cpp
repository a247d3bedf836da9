#include "clipsgd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace clipsgd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Eigen::Map<const Eigen::VectorXd> as_eigen(const Vector& v) {
  return {v.values().data(), static_cast<Eigen::Index>(v.size())};
}

Vector from_eigen(const Eigen::VectorXd& v) {
  return Vector(std::vector<double>(v.data(), v.data() + v.size()));
}

class CoshObjective final : public Objective {
 public:
  CoshObjective(double L0, double L1) : scale_(L0 / (L1 * L1)), L0_(L0), L1_(L1) {
    set_constants(L0, L1);
    set_optimum(Vector{0.0}, scale_);
  }
  std::string name() const override { return "cosh"; }
  std::size_t dimension() const override { return 1; }
  double value(const Vector& x) const override {
    check(x);
    return scale_ * std::cosh(L1_ * x[0]);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return Vector{(L0_ / L1_) * std::sinh(L1_ * x[0])};
  }
  // cosh(z) - 1 = 2 sinh(z/2)^2
  double gap(const Vector& x) const override {
    check(x);
    const double h = std::sinh(0.5 * L1_ * x[0]);
    return 2.0 * scale_ * h * h;
  }
  Vector hessian_vector_product(const Vector& x, const Vector& v) const override {
    check(x);
    check(v);
    return Vector{L0_ * std::cosh(L1_ * x[0]) * v[0]};
  }
  std::optional<double> hessian_norm(const Vector& x) const override {
    check(x);
    return L0_ * std::cosh(L1_ * x[0]);
  }

 private:
  static void check(const Vector& x) {
    if (x.size() != 1) throw DimensionMismatch("cosh objective is one-dimensional");
  }
  double scale_, L0_, L1_;
};

class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::size_t dim) : dim_(dim) {
    set_constants(1.0, 0.0);
    set_optimum(Vector(dim, 0.0), 0.0);
  }
  std::string name() const override { return "quadratic"; }
  std::size_t dimension() const override { return dim_; }
  double value(const Vector& x) const override {
    check(x);
    return 0.5 * dot(x, x);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return x;
  }
  Vector hessian_vector_product(const Vector& x, const Vector& v) const override {
    check(x);
    check(v);
    return v;
  }
  std::optional<double> hessian_norm(const Vector& x) const override {
    check(x);
    return 1.0;
  }

 private:
  void check(const Vector& x) const {
    if (x.size() != dim_) throw DimensionMismatch("quadratic: wrong dimension");
  }
  std::size_t dim_;
};

class QuarticSynthetic final : public Objective {
 public:
  explicit QuarticSynthetic(std::vector<double> a) : a_(std::move(a)) {
    a2_.resize(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) a2_[i] = a_[i] * a_[i];
    set_optimum(Vector(a_.size(), 0.0), 0.0);
  }
  void declare(double L0, double L1) { set_constants(L0, L1); }

  std::string name() const override { return "quartic_synthetic"; }
  std::size_t dimension() const override { return a_.size(); }

  double value(const Vector& x) const override {
    const double s = energy(x);
    return s * s;
  }
  Vector gradient(const Vector& x) const override {
    const double s = energy(x);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 4.0 * s * a2_[i] * x[i];
    return Vector(std::move(g));
  }
  // H = 4 s D + 8 (D x)(D x)^T with D = A^2 and s = x^T D x.
  Vector hessian_vector_product(const Vector& x, const Vector& v) const override {
    const double s = energy(x);
    require_same_dimension(x, v);
    double uv = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) uv += a2_[i] * x[i] * v[i];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = 4.0 * s * a2_[i] * v[i] + 8.0 * a2_[i] * x[i] * uv;
    }
    return Vector(std::move(out));
  }
  std::optional<double> hessian_norm(const Vector& x) const override {
    const double s = energy(x);
    std::vector<double> d(x.size()), u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      d[i] = 4.0 * s * a2_[i];
      u[i] = a2_[i] * x[i];
    }
    return diag_plus_rank_one_max_eigenvalue(d, u, 8.0);
  }

 private:
  double energy(const Vector& x) const {
    if (x.size() != a_.size()) throw DimensionMismatch("quartic: wrong dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += a2_[i] * x[i] * x[i];
    return s;
  }
  std::vector<double> a_, a2_;
};

}  // namespace

Vector Objective::hessian_vector_product(const Vector& x, const Vector& v) const {
  require_same_dimension(x, v);
  const double vn = norm(v);
  if (vn == 0.0) return Vector(x.size(), 0.0);
  const double h = std::cbrt(kEps) * std::max(1.0, norm(x));
  const double step = h / vn;
  Vector plus = x;
  plus.axpy(step, v);
  Vector minus = x;
  minus.axpy(-step, v);
  Vector diff = gradient(plus) - gradient(minus);
  diff *= 1.0 / (2.0 * step);
  return diff;
}

std::optional<double> Objective::hessian_norm(const Vector& x) const {
  return power_iteration_hessian_norm(*this, x);
}

std::optional<double> power_iteration_hessian_norm(const Objective& obj,
                                                   const Vector& x,
                                                   int max_iterations,
                                                   double tolerance) {
  const std::size_t d = x.size();
  // Deterministic, slightly non-uniform start so it is unlikely to be
  // orthogonal to the top eigenvector.
  std::vector<double> start(d);
  for (std::size_t i = 0; i < d; ++i) start[i] = 1.0 + 0.1 * static_cast<double>(i) / static_cast<double>(d);
  Vector v(std::move(start));
  v *= 1.0 / norm(v);
  double lambda = 0.0;
  try {
    for (int it = 0; it < max_iterations; ++it) {
      Vector hv = obj.hessian_vector_product(x, v);
      const double next = norm(hv);
      if (next == 0.0) return 0.0;
      hv *= 1.0 / next;
      const bool converged = std::abs(next - lambda) <= tolerance * next;
      lambda = next;
      v = std::move(hv);
      if (converged) break;
    }
  } catch (const NonFiniteError&) {
    return std::nullopt;
  }
  return lambda;
}

double diag_plus_rank_one_max_eigenvalue(std::span<const double> d,
                                         std::span<const double> u, double rho) {
  if (d.size() != u.size() || d.empty()) {
    throw DimensionMismatch("diag_plus_rank_one_max_eigenvalue: size mismatch");
  }
  const double dmax = *std::max_element(d.begin(), d.end());
  double u2 = 0.0;
  double active_max = -kInfinity;
  for (std::size_t i = 0; i < d.size(); ++i) {
    u2 += u[i] * u[i];
    if (u[i] != 0.0) active_max = std::max(active_max, d[i]);
  }
  if (rho * u2 == 0.0) return dmax;
  // Secular function rho * sum u_i^2 / (lambda - d_i) - 1 is decreasing on
  // (active_max, inf) and non-positive at dmax + rho |u|^2.
  double lo = active_max;
  double hi = dmax + rho * u2;
  for (int it = 0; it < 200 && hi - lo > 4.0 * kEps * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (u[i] != 0.0) s += u[i] * u[i] / (mid - d[i]);
    }
    if (rho * s > 1.0) lo = mid; else hi = mid;
  }
  return std::max(hi, dmax);
}

Vector sample_in_ball(RandomStream& stream, const BallRegion& region) {
  const std::size_t d = region.center.size();
  Vector dir = draw_standard_normal(stream, d);
  double n = norm(dir);
  while (n == 0.0) {
    dir = draw_standard_normal(stream, d);
    n = norm(dir);
  }
  const double r = region.radius * std::pow(stream.uniform(), 1.0 / static_cast<double>(d));
  Vector out = region.center;
  out.axpy(r / n, dir);
  return out;
}

ObjectivePtr make_cosh(double L0, double L1) {
  if (!(L0 > 0.0) || !(L1 > 0.0) || !std::isfinite(L0) || !std::isfinite(L1)) {
    throw DomainError("make_cosh: L0 and L1 must be positive");
  }
  return std::make_shared<CoshObjective>(L0, L1);
}

ObjectivePtr make_quadratic(std::size_t dim) {
  if (dim == 0) throw DomainError("make_quadratic: dimension must be >= 1");
  return std::make_shared<QuadraticObjective>(dim);
}

std::vector<double> harmonic_diagonal(std::size_t dim) {
  std::vector<double> a(dim);
  for (std::size_t i = 0; i < dim; ++i) a[i] = 1.0 / static_cast<double>(dim - i);
  return a;
}

ObjectivePtr make_quartic_synthetic(std::vector<double> a,
                                    std::optional<BallRegion> certify_region,
                                    const CertifyOptions& opts) {
  if (a.empty()) throw DomainError("make_quartic_synthetic: empty diagonal");
  for (double ai : a) {
    if (!(ai > 0.0) || !std::isfinite(ai)) {
      throw DomainError("make_quartic_synthetic: diagonal entries must be positive");
    }
  }
  auto obj = std::make_shared<QuarticSynthetic>(std::move(a));
  BallRegion region = certify_region.value_or(BallRegion{obj->x_star(), 1.0});
  const SmoothnessCertificate cert = certify_smoothness(*obj, region, opts);
  obj->declare(cert.L0, cert.L1);
  return obj;
}

// -- quartic regression --------------------------------------------------------

QuarticRegression::QuarticRegression(std::shared_ptr<const RegressionData> data)
    : data_(std::move(data)) {
  if (!data_) throw DataError("quartic regression: null data");
}

std::size_t QuarticRegression::dimension() const { return data_->cols(); }

Eigen::VectorXd QuarticRegression::residual(const Vector& w) const {
  if (w.size() != dimension()) throw DimensionMismatch("quartic regression: wrong dimension");
  return data_->X * as_eigen(w) - data_->y;
}

double QuarticRegression::value(const Vector& w) const {
  const double s = residual(w).squaredNorm();
  return s * s;
}

Vector QuarticRegression::gradient(const Vector& w) const {
  const Eigen::VectorXd r = residual(w);
  const double s = r.squaredNorm();
  return from_eigen(4.0 * s * (data_->X.transpose() * r));
}

// H = 4 s X^T X + 8 (X^T r)(X^T r)^T.
Vector QuarticRegression::hessian_vector_product(const Vector& w, const Vector& v) const {
  require_same_dimension(w, v);
  const Eigen::VectorXd r = residual(w);
  const double s = r.squaredNorm();
  const Eigen::VectorXd g = data_->X.transpose() * r;
  const Eigen::VectorXd xv = data_->X * as_eigen(v);
  return from_eigen(4.0 * s * (data_->X.transpose() * xv) + 8.0 * g * g.dot(as_eigen(v)));
}

double QuarticRegression::gap(const Vector& w) const {
  if (residual_star_.size() == 0) return Objective::gap(w);
  const Eigen::VectorXd d = data_->X * (as_eigen(w) - as_eigen(x_star()));
  // |X w - y|^2 - s* = |d|^2 + 2 <d, r*>, with s* = |r*|^2.
  const double excess = d.squaredNorm() + 2.0 * d.dot(residual_star_);
  return excess * (excess + 2.0 * residual_star_.squaredNorm());
}

std::optional<double> QuarticRegression::hessian_norm(const Vector& w) const {
  const Eigen::VectorXd r = residual(w);
  const double s = r.squaredNorm();
  // Rotate into the eigenbasis of the Gram matrix: diag(4 s lambda) + 8 u u^T.
  const Eigen::VectorXd u = gram_eigvecs_.transpose() * (data_->X.transpose() * r);
  const Eigen::VectorXd d = 4.0 * s * gram_eigvals_;
  return diag_plus_rank_one_max_eigenvalue(
      std::span<const double>(d.data(), static_cast<std::size_t>(d.size())),
      std::span<const double>(u.data(), static_cast<std::size_t>(u.size())), 8.0);
}

namespace {

void check_design(const RegressionData& data) {
  const auto n = data.X.rows();
  const auto d = data.X.cols();
  if (d == 0 || n == 0) throw DataError("quartic regression: empty design matrix");
  if (data.y.size() != n) throw DimensionMismatch("quartic regression: X and y row counts differ");
  if (n < d) throw DataError("quartic regression: need at least as many rows as columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < d) throw DataError("quartic regression: X is rank deficient");
}

LeastSquares solve_normal_equations(const RegressionData& data, const Eigen::MatrixXd& gram,
                                    const Eigen::VectorXd& eigvals) {
  const Eigen::VectorXd rhs = data.X.transpose() * data.y;
  const double lmax = eigvals.maxCoeff();
  const double lmin = eigvals.minCoeff();
  LeastSquares out;
  Eigen::MatrixXd system = gram;
  if (lmin <= 1e-12 * lmax) {
    system.diagonal().array() += 1e-10 * std::max(1.0, lmax);
    out.used_ridge = true;
  }
  const Eigen::VectorXd w = system.ldlt().solve(rhs);
  out.w = from_eigen(w);
  out.residual_sq = (data.X * w - data.y).squaredNorm();
  return out;
}

}  // namespace

LeastSquares least_squares_solution(const RegressionData& data) {
  check_design(data);
  const Eigen::MatrixXd gram = data.X.transpose() * data.X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return solve_normal_equations(data, gram, eig.eigenvalues().cwiseMax(0.0));
}

std::shared_ptr<const QuarticRegression> make_quartic_regression(
    std::shared_ptr<const RegressionData> data, std::optional<BallRegion> certify_region,
    const CertifyOptions& opts) {
  if (!data) throw DataError("make_quartic_regression: null data");
  check_design(*data);

  auto obj = std::shared_ptr<QuarticRegression>(new QuarticRegression(data));
  const Eigen::MatrixXd gram = data->X.transpose() * data->X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  obj->gram_eigvals_ = eig.eigenvalues().cwiseMax(0.0);
  obj->gram_eigvecs_ = eig.eigenvectors();

  LeastSquares ls = solve_normal_equations(*data, gram, obj->gram_eigvals_);
  obj->used_ridge_ = ls.used_ridge;
  obj->residual_star_ = data->X * as_eigen(ls.w) - data->y;
  obj->set_optimum(std::move(ls.w), ls.residual_sq * ls.residual_sq);

  BallRegion region = certify_region.value_or(
      BallRegion{obj->x_star(), 2.0 * norm(obj->x_star()) + 1.0});
  const SmoothnessCertificate cert = certify_smoothness(*obj, region, opts);
  obj->set_constants(cert.L0, cert.L1);
  return obj;
}

Vector finite_difference_gradient(const Objective& obj, const Vector& x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = std::cbrt(kEps) * std::max(1.0, std::abs(x[i]));
    Vector plus = x;
    Vector minus = x;
    plus.set(i, x[i] + h);
    minus.set(i, x[i] - h);
    // Use the exactly representable step actually taken.
    const double step = plus[i] - minus[i];
    g[i] = (obj.value(plus) - obj.value(minus)) / step;
  }
  return Vector(std::move(g));
}

}  // namespace clipsgd
