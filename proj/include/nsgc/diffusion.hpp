#pragma once

// DDPM building blocks: linear beta schedule, the closed-form forward marginal,
// clean-signal prediction from a noise predictor, and ancestral sampling.
// Time steps are 1-based; alpha_bar(0) == 1.

#include <Eigen/Core>

#include "nsgc/rng.hpp"
#include "nsgc/signal.hpp"

namespace nsgc::diffusion {

using Eigen::Index;
using Eigen::VectorXd;

class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(VectorXd betas);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[t - 1]; }
  double alpha(int t) const { return alpha_[t - 1]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[t - 1]; }
  /// Posterior std sqrt((1 - abar_{t-1}) / (1 - abar_t) * beta_t); zero at t = 1.
  double sigma(int t) const { return sigma_[t - 1]; }
  double variance(int t) const { return variance_[t - 1]; }

  /// Weight of x0 in the posterior mean: sqrt(abar_{t-1}) beta_t / (1 - abar_t).
  double x0_coef(int t) const { return x0_coef_[t - 1]; }
  /// Weight of x_t in the posterior mean: sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t).
  double xt_coef(int t) const { return xt_coef_[t - 1]; }

  const VectorXd& betas() const { return beta_; }
  const VectorXd& alpha_bars() const { return alpha_bar_; }
  const VectorXd& sigmas() const { return sigma_; }

  void check_step(int t) const;

 private:
  VectorXd beta_, alpha_, alpha_bar_, variance_, sigma_, x0_coef_, xt_coef_;
};

/// Betas interpolated linearly from beta_start to beta_end, both inclusive.
NoiseSchedule linear_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
VectorXd forward_sample(const VectorXd& x0, int t, const VectorXd& eps, const NoiseSchedule& schedule);

/// Anything that maps (x_t, t) to a noise estimate of the same shape.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual VectorXd predict_noise(const VectorXd& xt, int t) const = 0;
};

enum class X0Formula {
  corrected,  // (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
  literal,    // (x_t - eps_hat) / sqrt(abar_t)
};

VectorXd predict_x0(const NoisePredictor& model, const VectorXd& xt, int t, const NoiseSchedule& schedule,
                    X0Formula formula = X0Formula::corrected);
/// Same, from an already computed noise estimate.
VectorXd x0_from_noise(const VectorXd& xt, const VectorXd& eps_hat, int t, const NoiseSchedule& schedule,
                       X0Formula formula = X0Formula::corrected);

/// Posterior mean in x0 form.
VectorXd posterior_mean(const VectorXd& x0, const VectorXd& xt, int t, const NoiseSchedule& schedule);
/// Posterior mean in noise form: (x_t - eps (1 - alpha_t) / sqrt(1 - abar_t)) / sqrt(alpha_t).
VectorXd posterior_mean_eps(const VectorXd& eps, const VectorXd& xt, int t, const NoiseSchedule& schedule);

struct SamplerOptions {
  X0Formula x0_formula = X0Formula::corrected;
  bool clip_x0 = true;  // clamp x_{0|t} to [-1, 1] before use
};

/// Clean-signal estimate used by both samplers: predict_x0 followed by optional clipping.
VectorXd sampler_x0(const NoisePredictor& model, const VectorXd& xt, int t, const NoiseSchedule& schedule,
                    const SamplerOptions& options);

/// t = T..1 ancestral sampling from x_T ~ N(0, I). No noise is added at t = 1.
VectorXd ancestral_sample(const NoisePredictor& model, const NoiseSchedule& schedule, Rng& rng, Index dim,
                          const SamplerOptions& options = {});
RealSignal ancestral_sample(const NoisePredictor& model, const NoiseSchedule& schedule, Rng& rng, ImageShape shape,
                            const SamplerOptions& options = {});

}  // namespace nsgc::diffusion
