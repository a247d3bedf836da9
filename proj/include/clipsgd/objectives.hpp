#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clipsgd/core.hpp"
#include "clipsgd/random.hpp"

namespace clipsgd {

/// Ball {x : |x - center| <= radius} used for sampling and certification.
struct BallRegion {
  Vector center;
  double radius = 1.0;
};

/// Convex objective with exact gradient, declared (L0, L1) constants and a
/// reference optimum.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Hessian-vector product. The default differentiates the gradient with a
  /// central difference along v.
  virtual Vector hessian_vector_product(const Vector& x, const Vector& v) const;

  /// Spectral norm of the Hessian at x. The default runs power iteration on
  /// hessian_vector_product (50 iterations, relative tolerance 1e-8) and
  /// returns nullopt if the iteration produces non-finite values.
  virtual std::optional<double> hessian_norm(const Vector& x) const;

  double L0() const noexcept { return L0_; }
  double L1() const noexcept { return L1_; }
  const Vector& x_star() const noexcept { return x_star_; }
  double f_star() const noexcept { return f_star_; }

  /// f(x) - f_star. Objectives may override this with a form that avoids
  /// cancellation near the optimum.
  virtual double gap(const Vector& x) const { return value(x) - f_star_; }

 protected:
  void set_constants(double L0, double L1) {
    L0_ = L0;
    L1_ = L1;
  }
  void set_optimum(Vector x_star, double f_star) {
    x_star_ = std::move(x_star);
    f_star_ = f_star;
  }

 private:
  double L0_ = 0.0;
  double L1_ = 0.0;
  Vector x_star_;
  double f_star_ = 0.0;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// Power iteration for the largest |eigenvalue| of the Hessian at x, using
/// only Hessian-vector products.
std::optional<double> power_iteration_hessian_norm(const Objective& obj,
                                                   const Vector& x,
                                                   int max_iterations = 50,
                                                   double tolerance = 1e-8);

/// Largest eigenvalue of diag(d) + rho * u u^T (rho >= 0), by bisection on
/// the secular equation.
double diag_plus_rank_one_max_eigenvalue(std::span<const double> d,
                                         std::span<const double> u, double rho);

/// Result of empirical (L0, L1) certification.
struct SmoothnessCertificate {
  double L0 = 0.0;
  double L1 = 0.0;
  /// max_i (hessian_norm_i - L0 - L1 * grad_norm_i); <= 0 for a valid
  /// certificate.
  double max_violation = 0.0;
  std::size_t samples = 0;
};

/// Options for certify_smoothness.
///
/// The candidate grid is {0} U {ratio^k : k integer} for both constants.
/// For each candidate L1 the smallest L0 that satisfies the (L0, L1) inequality at
/// every sample is rounded up onto the grid; among those pairs the one
/// minimising the mean sampled bound L0 + L1 * mean(|grad f|) is returned
/// (ties go to the smaller L1). The required L0 is then refined by a
/// projected random-direction ascent of |hess f| - L1 |grad f| started
/// from the `refine_starts` worst samples, so local maxima between the
/// samples are covered.
struct CertifyOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 0x5EED;
  double grid_ratio = 1.01;
  int min_exponent = -2000;
  int max_exponent = 2000;
  std::size_t refine_starts = 16;
  std::size_t refine_evaluations = 600;  // per start
};

/// Samples `opts.samples` points uniformly in `region` (plus the center)
/// and returns the grid-smallest (L0, L1) satisfying
/// |hess f(x)| <= L0 + L1 |grad f(x)| at all of them.
SmoothnessCertificate certify_smoothness(const Objective& obj,
                                         const BallRegion& region,
                                         const CertifyOptions& opts = {});

/// Uniform sample from a ball; consumes one normal vector and one uniform.
Vector sample_in_ball(RandomStream& stream, const BallRegion& region);

// -- builtin objectives ------------------------------------------------------

/// f(x) = (L0 / L1^2) cosh(L1 x), d = 1.
ObjectivePtr make_cosh(double L0, double L1);

/// f(x) = 0.5 |x|^2 with constants (1, 0).
ObjectivePtr make_quadratic(std::size_t dim);

/// Diagonal (1/d, 1/(d-1), ..., 1) used by the synthetic experiment.
std::vector<double> harmonic_diagonal(std::size_t dim);

/// f(x) = |A x|^4 with A = diag(a). Constants are certified over
/// `certify_region` (default: ball of radius 1 around the optimum).
ObjectivePtr make_quartic_synthetic(std::vector<double> a,
                                    std::optional<BallRegion> certify_region = {},
                                    const CertifyOptions& opts = {});

/// Column role after ingestion.
enum class ColumnKind { bias, numeric, one_hot };

/// Regression design matrix and targets.
struct RegressionData {
  Eigen::MatrixXd X;  // n x d, first column all ones
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> kinds;
  std::string target_name;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
};

/// Quartic least squares f(w) = |X w - y|^4.
class QuarticRegression;

/// Least-squares solution of min |X w - y|^2 via the normal equations,
/// with a ridge of 1e-10 * max(1, lambda_max(X^T X)) added when the Gram
/// matrix is numerically singular. Throws DataError when X has fewer rows
/// than columns or is rank deficient.
struct LeastSquares {
  Vector w;
  double residual_sq = 0.0;
  bool used_ridge = false;
};
LeastSquares least_squares_solution(const RegressionData& data);

/// Builds the quartic regression objective. The optimum is the
/// least-squares solution; constants are certified over `certify_region`
/// (default: ball of radius 2 |x_star| + 1 around the optimum, which
/// contains the origin).
std::shared_ptr<const QuarticRegression> make_quartic_regression(
    std::shared_ptr<const RegressionData> data,
    std::optional<BallRegion> certify_region = {},
    const CertifyOptions& opts = {});

class QuarticRegression final : public Objective {
 public:
  explicit QuarticRegression(std::shared_ptr<const RegressionData> data);

  std::string name() const override { return "quartic_regression"; }
  std::size_t dimension() const override;
  double value(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Vector hessian_vector_product(const Vector& w, const Vector& v) const override;
  std::optional<double> hessian_norm(const Vector& w) const override;
  /// Expands |X w - y|^2 around the optimum to avoid cancellation.
  double gap(const Vector& w) const override;

  const RegressionData& data() const { return *data_; }
  std::shared_ptr<const RegressionData> data_ptr() const { return data_; }
  /// Residual X w - y.
  Eigen::VectorXd residual(const Vector& w) const;
  /// True if the normal equations needed the ridge fallback.
  bool used_ridge() const { return used_ridge_; }

 private:
  std::shared_ptr<const RegressionData> data_;
  Eigen::MatrixXd gram_eigvecs_;
  Eigen::VectorXd gram_eigvals_;
  Eigen::VectorXd residual_star_;
  bool used_ridge_ = false;

  friend std::shared_ptr<const QuarticRegression> make_quartic_regression(
      std::shared_ptr<const RegressionData>, std::optional<BallRegion>,
      const CertifyOptions&);
};

/// Central finite-difference gradient with per-coordinate step
/// cbrt(eps) * max(1, |x_i|).
Vector finite_difference_gradient(const Objective& obj, const Vector& x);

}  // namespace clipsgd
