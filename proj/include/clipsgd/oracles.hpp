#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "clipsgd/core.hpp"
#include "clipsgd/objectives.hpp"
#include "clipsgd/random.hpp"

namespace clipsgd {

enum class NoiseKind { none, bounded, sub_gaussian };

/// Additive gradient noise.
///
/// bounded: sigma * u * s^{1/d} with u uniform on the unit sphere and s
/// uniform on (0,1), i.e. uniform in the ball of radius sigma.
/// sub_gaussian: iid N(0, entry_std^2) entries. The default entry_std is
/// sigma * min(1/sqrt(2d), 1/sqrt(8)), which keeps E exp(|xi|^2/sigma^2)
/// at or below e with a finite Monte Carlo variance in every dimension.
struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;
  double entry_std = 0.0;  // sub_gaussian only

  static NoiseModel none();
  static NoiseModel bounded(double sigma);
  static NoiseModel sub_gaussian(double sigma, std::size_t dim);
  /// Gaussian noise with the given Var |xi|^2 in dimension d: entries have
  /// std (var / 2d)^{1/4}; sigma is reported as sqrt(var).
  static NoiseModel gaussian_norm_variance(double var, std::size_t dim);
};

const char* to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

/// sigma for none/bounded noise, 3 sigma sqrt(ln(T/delta)) for sub-Gaussian
/// noise. `factor` replaces the leading 3.
double effective_sigma(const NoiseModel& noise, std::uint64_t T, double delta,
                       double factor = 3.0);

/// Counter range consumed by one oracle call.
struct DrawRecord {
  std::uint64_t stream_id = 0;
  std::uint64_t counter_begin = 0;
  std::uint64_t counter_end = 0;
};

/// Stochastic first-order oracle.
///
/// Draws come from two substreams of the seed: the scale channel (used by
/// sample() and for g_tilde in double_sample()) and the direction channel
/// (g in double_sample()). The two never share a counter block.
class GradientOracle {
 public:
  GradientOracle(ObjectivePtr objective, std::uint64_t seed);
  virtual ~GradientOracle() = default;

  const Objective& objective() const { return *objective_; }
  ObjectivePtr objective_ptr() const { return objective_; }

  /// Noise scale used by the method parameterizations.
  virtual double sigma() const = 0;
  virtual NoiseModel noise() const = 0;
  virtual std::unique_ptr<GradientOracle> clone() const = 0;

  /// One stochastic gradient from the scale channel.
  Vector sample(const Vector& x);
  /// (g_tilde, g): scale channel then direction channel.
  std::pair<Vector, Vector> double_sample(const Vector& x);

  /// Restarts both channels from a new seed.
  void reseed(std::uint64_t seed);
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t calls() const noexcept { return calls_; }

  const RandomStream& scale_stream() const noexcept { return scale_; }
  const RandomStream& direction_stream() const noexcept { return direction_; }

  void set_audit(bool on) { audit_on_ = on; }
  const std::vector<DrawRecord>& audit() const noexcept { return audit_; }

 protected:
  virtual Vector draw(const Vector& x, RandomStream& stream) = 0;
  virtual void on_reseed() {}

 private:
  Vector tracked_draw(const Vector& x, RandomStream& stream);

  ObjectivePtr objective_;
  std::uint64_t seed_ = 0;
  RandomStream scale_;
  RandomStream direction_;
  std::uint64_t calls_ = 0;
  bool audit_on_ = false;
  std::vector<DrawRecord> audit_;
};

using OraclePtr = std::unique_ptr<GradientOracle>;

/// Exact gradient plus additive noise from a NoiseModel.
class NoisyOracle final : public GradientOracle {
 public:
  NoisyOracle(ObjectivePtr objective, NoiseModel noise, std::uint64_t seed);

  double sigma() const override { return noise_.sigma; }
  NoiseModel noise() const override { return noise_; }
  std::unique_ptr<GradientOracle> clone() const override;

 protected:
  Vector draw(const Vector& x, RandomStream& stream) override;

 private:
  NoiseModel noise_;
};

/// Unbiased minibatch estimator of the quartic regression gradient.
///
/// grad f(w) = 4 S v with S = sum_i r_i^2 and v = sum_j r_j x_j. Two
/// independent batches of size b, each drawn without replacement, give
/// S_hat = (n/b) sum_{B1} r_i^2 and v_hat = (n/b) sum_{B2} r_j x_j, and
/// 4 S_hat v_hat is unbiased because the batches are independent. With
/// b = n the exact gradient is returned and no randomness is consumed.
class MinibatchOracle final : public GradientOracle {
 public:
  MinibatchOracle(std::shared_ptr<const QuarticRegression> objective,
                  std::size_t batch, std::uint64_t seed, double declared_sigma = 0.0);

  std::size_t batch() const noexcept { return batch_; }
  double sigma() const override { return declared_sigma_; }
  NoiseModel noise() const override { return NoiseModel::bounded(declared_sigma_); }
  std::unique_ptr<GradientOracle> clone() const override;

 protected:
  Vector draw(const Vector& x, RandomStream& stream) override;
  void on_reseed() override;

 private:
  void choose(RandomStream& stream, std::vector<std::size_t>& out);

  std::shared_ptr<const QuarticRegression> regression_;
  std::size_t batch_;
  double declared_sigma_;
  std::vector<std::size_t> perm_;
};

OraclePtr make_noisy_oracle(ObjectivePtr objective, NoiseModel noise, std::uint64_t seed);
OraclePtr make_minibatch_oracle(std::shared_ptr<const QuarticRegression> objective,
                                std::size_t batch, std::uint64_t seed,
                                double declared_sigma = 0.0);

}  // namespace clipsgd
