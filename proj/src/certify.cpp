#include <algorithm>
#include <cmath>
#include <vector>

#include "clipsgd/objectives.hpp"
#include "clipsgd/random.hpp"

namespace clipsgd {

namespace {

// Smallest grid value ratio^k >= v (0 for v <= 0).
double round_up_to_grid(double v, double ratio) {
  if (v <= 0.0) return 0.0;
  const double lr = std::log(ratio);
  double k = std::ceil(std::log(v) / lr);
  double g = std::pow(ratio, k);
  while (g < v) g = std::pow(ratio, ++k);
  while (std::pow(ratio, k - 1.0) >= v) g = std::pow(ratio, --k);
  return g;
}

}  // namespace

SmoothnessCertificate certify_smoothness(const Objective& obj, const BallRegion& region,
                                         const CertifyOptions& opts) {
  if (region.center.size() != obj.dimension()) {
    throw DimensionMismatch("certify_smoothness: region dimension mismatch");
  }
  if (!(region.radius > 0.0)) throw DomainError("certify_smoothness: radius must be positive");
  if (opts.samples < 1) throw DomainError("certify_smoothness: samples must be >= 1");
  if (!(opts.grid_ratio > 1.0)) throw DomainError("certify_smoothness: grid ratio must exceed 1");

  RandomStream stream(opts.seed, 0xCE27'1F1Cull);
  std::vector<double> hess, grad;
  std::vector<Vector> points;
  hess.reserve(opts.samples + 1);
  grad.reserve(opts.samples + 1);
  points.reserve(opts.samples + 1);
  auto add_point = [&](Vector x) {
    const auto h = obj.hessian_norm(x);
    if (!h) throw DomainError("certify_smoothness: hessian norm unavailable");
    hess.push_back(*h);
    grad.push_back(norm(obj.gradient(x)));
    points.push_back(std::move(x));
  };
  add_point(region.center);
  for (std::size_t i = 0; i < opts.samples; ++i) add_point(sample_in_ball(stream, region));

  const std::size_t m = hess.size();
  double mean_grad = 0.0;
  double max_ratio = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_grad += grad[i];
    if (grad[i] > 0.0) max_ratio = std::max(max_ratio, hess[i] / grad[i]);
  }
  mean_grad /= static_cast<double>(m);

  auto l0_for = [&](double l1) {
    double need = 0.0;
    for (std::size_t i = 0; i < m; ++i) need = std::max(need, hess[i] - l1 * grad[i]);
    return round_up_to_grid(need, opts.grid_ratio);
  };

  double best_l1 = 0.0;
  double best_l0 = l0_for(0.0);
  double best_score = best_l0;
  if (max_ratio > 0.0) {
    // Beyond max h/g only the zero-gradient samples constrain L0, so larger
    // L1 never helps.
    const int k_hi = std::min(
        opts.max_exponent,
        static_cast<int>(std::ceil(std::log(max_ratio) / std::log(opts.grid_ratio))) + 1);
    for (int k = opts.min_exponent; k <= k_hi; ++k) {
      const double l1 = std::pow(opts.grid_ratio, k);
      const double l0 = l0_for(l1);
      const double score = l0 + l1 * mean_grad;
      if (score < best_score) {
        best_score = score;
        best_l0 = l0;
        best_l1 = l1;
      }
    }
  }

  // Local ascent of the slack from the worst samples.
  if (opts.refine_starts > 0 && opts.refine_evaluations > 0) {
    auto excess = [&](const Vector& x) {
      const auto h = obj.hessian_norm(x);
      if (!h) return -kInfinity;
      return *h - best_l1 * norm(obj.gradient(x));
    };
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    const std::size_t starts = std::min(opts.refine_starts, m);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return hess[a] - best_l1 * grad[a] > hess[b] - best_l1 * grad[b];
                      });
    RandomStream dirs(opts.seed, 0xCE27'1F1Dull);
    const std::size_t d = obj.dimension();
    double need = 0.0;
    for (std::size_t i = 0; i < m; ++i) need = std::max(need, hess[i] - best_l1 * grad[i]);
    for (std::size_t s = 0; s < starts; ++s) {
      Vector x = points[order[s]];
      double fx = hess[order[s]] - best_l1 * grad[order[s]];
      double step = 0.1 * region.radius;
      int misses = 0;
      for (std::size_t e = 0; e < opts.refine_evaluations && step > 1e-9 * region.radius; ++e) {
        Vector u = draw_standard_normal(dirs, d);
        u *= step / std::max(norm(u), 1e-300);
        Vector y = project_ball(x + u, region.center, region.radius);
        const double fy = excess(y);
        if (fy > fx) {
          x = std::move(y);
          fx = fy;
          misses = 0;
        } else if (++misses >= static_cast<int>(2 * d + 4)) {
          step *= 0.5;
          misses = 0;
        }
      }
      need = std::max(need, fx);
    }
    best_l0 = std::max(best_l0, round_up_to_grid(need, opts.grid_ratio));
  }

  SmoothnessCertificate cert;
  cert.L0 = best_l0;
  cert.L1 = best_l1;
  cert.samples = m;
  cert.max_violation = -kInfinity;
  for (std::size_t i = 0; i < m; ++i) {
    cert.max_violation = std::max(cert.max_violation, hess[i] - best_l0 - best_l1 * grad[i]);
  }
  return cert;
}

}  // namespace clipsgd
