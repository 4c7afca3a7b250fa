#include "nsgc/diffusion.hpp"

#include <cmath>
#include <string>

#include "nsgc/errors.hpp"

namespace nsgc::diffusion {

NoiseSchedule::NoiseSchedule(VectorXd betas) : beta_(std::move(betas)) {
  const Index n = beta_.size();
  require(n >= 1, "NoiseSchedule: need at least one step");
  require((beta_.array() > 0.0).all() && (beta_.array() < 1.0).all(), "NoiseSchedule: betas must lie in (0, 1)");
  alpha_ = (1.0 - beta_.array()).matrix();
  alpha_bar_.resize(n);
  variance_.resize(n);
  sigma_.resize(n);
  x0_coef_.resize(n);
  xt_coef_.resize(n);
  double prod = 1.0;
  for (Index i = 0; i < n; ++i) {
    const double prev = prod;
    prod *= alpha_[i];
    alpha_bar_[i] = prod;
    variance_[i] = (1.0 - prev) / (1.0 - prod) * beta_[i];
    sigma_[i] = std::sqrt(variance_[i]);
    x0_coef_[i] = std::sqrt(prev) * beta_[i] / (1.0 - prod);
    xt_coef_[i] = std::sqrt(alpha_[i]) * (1.0 - prev) / (1.0 - prod);
  }
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps())
    throw ContractError("time step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  require(steps >= 1, "linear_schedule: T must be >= 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "linear_schedule: need 0 < beta_start <= beta_end < 1");
  VectorXd b(steps);
  if (steps == 1) {
    b[0] = beta_start;
  } else {
    for (int i = 0; i < steps; ++i)
      b[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return NoiseSchedule(std::move(b));
}

VectorXd forward_sample(const VectorXd& x0, int t, const VectorXd& eps, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  require(x0.size() == eps.size(), "forward_sample: noise shape must match signal");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

VectorXd x0_from_noise(const VectorXd& xt, const VectorXd& eps_hat, int t, const NoiseSchedule& schedule,
                       X0Formula formula) {
  schedule.check_step(t);
  const double ab = schedule.alpha_bar(t);
  const double noise_scale = formula == X0Formula::corrected ? std::sqrt(1.0 - ab) : 1.0;
  return (xt - noise_scale * eps_hat) / std::sqrt(ab);
}

VectorXd predict_x0(const NoisePredictor& model, const VectorXd& xt, int t, const NoiseSchedule& schedule,
                    X0Formula formula) {
  schedule.check_step(t);
  return x0_from_noise(xt, model.predict_noise(xt, t), t, schedule, formula);
}

VectorXd posterior_mean(const VectorXd& x0, const VectorXd& xt, int t, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  return schedule.x0_coef(t) * x0 + schedule.xt_coef(t) * xt;
}

VectorXd posterior_mean_eps(const VectorXd& eps, const VectorXd& xt, int t, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  const double a = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  return (xt - eps * ((1.0 - a) / std::sqrt(1.0 - ab))) / std::sqrt(a);
}

VectorXd sampler_x0(const NoisePredictor& model, const VectorXd& xt, int t, const NoiseSchedule& schedule,
                    const SamplerOptions& options) {
  VectorXd x0 = predict_x0(model, xt, t, schedule, options.x0_formula);
  if (options.clip_x0) x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);
  return x0;
}

VectorXd ancestral_sample(const NoisePredictor& model, const NoiseSchedule& schedule, Rng& rng, Index dim,
                          const SamplerOptions& options) {
  VectorXd x = standard_normal(rng, dim);
  for (int t = schedule.steps(); t >= 1; --t) {
    const VectorXd x0 = sampler_x0(model, x, t, schedule, options);
    VectorXd next = posterior_mean(x0, x, t, schedule);
    if (t > 1) next += schedule.sigma(t) * standard_normal(rng, dim);
    x = std::move(next);
  }
  return x;
}

RealSignal ancestral_sample(const NoisePredictor& model, const NoiseSchedule& schedule, Rng& rng, ImageShape shape,
                            const SamplerOptions& options) {
  return RealSignal(ancestral_sample(model, schedule, rng, shape.size(), options), shape);
}

}  // namespace nsgc::diffusion
