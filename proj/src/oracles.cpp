#include "clipsgd/oracles.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace clipsgd {

NoiseModel NoiseModel::none() { return {NoiseKind::none, 0.0, 0.0}; }

NoiseModel NoiseModel::bounded(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("noise sigma must be finite and >= 0");
  return {NoiseKind::bounded, sigma, 0.0};
}

NoiseModel NoiseModel::sub_gaussian(double sigma, std::size_t dim) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("noise sigma must be finite and >= 0");
  if (dim == 0) throw DomainError("noise dimension must be >= 1");
  const double k = std::min(1.0 / std::sqrt(2.0 * static_cast<double>(dim)), 1.0 / std::sqrt(8.0));
  return {NoiseKind::sub_gaussian, sigma, sigma * k};
}

NoiseModel NoiseModel::gaussian_norm_variance(double var, std::size_t dim) {
  if (!(var >= 0.0) || !std::isfinite(var)) throw DomainError("noise variance must be finite and >= 0");
  if (dim == 0) throw DomainError("noise dimension must be >= 1");
  return {NoiseKind::sub_gaussian, std::sqrt(var),
          std::pow(var / (2.0 * static_cast<double>(dim)), 0.25)};
}

const char* to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::bounded: return "bounded";
    case NoiseKind::sub_gaussian: return "sub_gaussian";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "bounded") return NoiseKind::bounded;
  if (name == "sub_gaussian" || name == "gaussian") return NoiseKind::sub_gaussian;
  throw ConfigError("unknown noise kind: " + name);
}

double effective_sigma(const NoiseModel& noise, std::uint64_t T, double delta, double factor) {
  if (T < 1) throw DomainError("effective_sigma: T must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("effective_sigma: delta must lie in (0,1)");
  if (noise.kind != NoiseKind::sub_gaussian) return noise.sigma;
  const double l = std::log(static_cast<double>(T) / delta);
  return factor * noise.sigma * std::sqrt(std::max(l, 0.0));
}

// -- GradientOracle ------------------------------------------------------------

GradientOracle::GradientOracle(ObjectivePtr objective, std::uint64_t seed)
    : objective_(std::move(objective)) {
  if (!objective_) throw ConfigError("oracle: null objective");
  reseed(seed);
}

void GradientOracle::reseed(std::uint64_t seed) {
  seed_ = seed;
  const RandomStream root(seed, 0);
  scale_ = root.substream(0);
  direction_ = root.substream(1);
  calls_ = 0;
  audit_.clear();
  on_reseed();
}

Vector GradientOracle::tracked_draw(const Vector& x, RandomStream& stream) {
  if (x.size() != objective_->dimension()) {
    throw DimensionMismatch("oracle: point dimension does not match objective");
  }
  const std::uint64_t begin = stream.counter();
  Vector g = draw(x, stream);
  ++calls_;
  if (audit_on_) audit_.push_back({stream.stream_id(), begin, stream.counter()});
  return g;
}

Vector GradientOracle::sample(const Vector& x) { return tracked_draw(x, scale_); }

std::pair<Vector, Vector> GradientOracle::double_sample(const Vector& x) {
  Vector g_tilde = tracked_draw(x, scale_);
  Vector g = tracked_draw(x, direction_);
  return {std::move(g_tilde), std::move(g)};
}

// -- NoisyOracle ---------------------------------------------------------------

NoisyOracle::NoisyOracle(ObjectivePtr objective, NoiseModel noise, std::uint64_t seed)
    : GradientOracle(std::move(objective), seed), noise_(noise) {
  if (noise_.kind == NoiseKind::sub_gaussian && noise_.entry_std == 0.0 && noise_.sigma > 0.0) {
    noise_ = NoiseModel::sub_gaussian(noise_.sigma, this->objective().dimension());
  }
}

std::unique_ptr<GradientOracle> NoisyOracle::clone() const {
  auto copy = std::make_unique<NoisyOracle>(*this);
  return copy;
}

Vector NoisyOracle::draw(const Vector& x, RandomStream& stream) {
  Vector grad = objective().gradient(x);
  const std::size_t d = grad.size();
  switch (noise_.kind) {
    case NoiseKind::none:
      return grad;
    case NoiseKind::bounded: {
      if (noise_.sigma == 0.0) return grad;
      Vector dir = draw_standard_normal(stream, d);
      const double r = noise_.sigma * std::pow(stream.uniform(), 1.0 / static_cast<double>(d));
      const double n = norm(dir);
      if (n == 0.0) return grad;
      Vector xi = dir * (r / n);
      // Rounding in the direction normalisation and in grad + xi may push
      // the realised deviation past sigma; shrink until it does not.
      Vector out = grad + xi;
      while (distance(out, grad) > noise_.sigma) {
        xi *= 1.0 - 0x1.0p-40;
        out = grad + xi;
      }
      return out;
    }
    case NoiseKind::sub_gaussian: {
      if (noise_.entry_std == 0.0) return grad;
      Vector xi = draw_standard_normal(stream, d);
      grad.axpy(noise_.entry_std, xi);
      return grad;
    }
  }
  return grad;
}

// -- MinibatchOracle -----------------------------------------------------------

MinibatchOracle::MinibatchOracle(std::shared_ptr<const QuarticRegression> objective,
                                 std::size_t batch, std::uint64_t seed, double declared_sigma)
    : GradientOracle(objective, seed),
      regression_(std::move(objective)),
      batch_(batch),
      declared_sigma_(declared_sigma) {
  const std::size_t n = regression_->data().rows();
  if (batch_ < 1 || batch_ > n) {
    throw ConfigError("minibatch size must lie in [1, " + std::to_string(n) + "]");
  }
  on_reseed();
}

void MinibatchOracle::on_reseed() {
  if (!regression_) return;
  perm_.resize(regression_->data().rows());
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

std::unique_ptr<GradientOracle> MinibatchOracle::clone() const {
  return std::make_unique<MinibatchOracle>(*this);
}

void MinibatchOracle::choose(RandomStream& stream, std::vector<std::size_t>& out) {
  // Partial Fisher-Yates: the first b slots become a uniform b-subset.
  const std::size_t n = perm_.size();
  out.resize(batch_);
  for (std::size_t i = 0; i < batch_; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.uniform_index(n - i));
    std::swap(perm_[i], perm_[j]);
    out[i] = perm_[i];
  }
}

Vector MinibatchOracle::draw(const Vector& x, RandomStream& stream) {
  const RegressionData& data = regression_->data();
  const std::size_t n = data.rows();
  if (batch_ == n) return regression_->gradient(x);

  const Eigen::Map<const Eigen::VectorXd> w(x.values().data(), static_cast<Eigen::Index>(x.size()));
  std::vector<std::size_t> b1, b2;
  choose(stream, b1);
  choose(stream, b2);
  const double scale = static_cast<double>(n) / static_cast<double>(batch_);

  double s_hat = 0.0;
  for (std::size_t i : b1) {
    const double r = data.X.row(static_cast<Eigen::Index>(i)).dot(w) - data.y(static_cast<Eigen::Index>(i));
    s_hat += r * r;
  }
  s_hat *= scale;
  Eigen::VectorXd v_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j : b2) {
    const auto row = data.X.row(static_cast<Eigen::Index>(j));
    const double r = row.dot(w) - data.y(static_cast<Eigen::Index>(j));
    v_hat += r * row.transpose();
  }
  v_hat *= scale;
  const Eigen::VectorXd g = 4.0 * s_hat * v_hat;
  return Vector(std::vector<double>(g.data(), g.data() + g.size()));
}

OraclePtr make_noisy_oracle(ObjectivePtr objective, NoiseModel noise, std::uint64_t seed) {
  return std::make_unique<NoisyOracle>(std::move(objective), noise, seed);
}

OraclePtr make_minibatch_oracle(std::shared_ptr<const QuarticRegression> objective,
                                std::size_t batch, std::uint64_t seed, double declared_sigma) {
  return std::make_unique<MinibatchOracle>(std::move(objective), batch, seed, declared_sigma);
}

}  // namespace clipsgd
