#include "nsgc/nullspace.hpp"

#include <cmath>
#include <ostream>

#include "nsgc/errors.hpp"

namespace nsgc::nullspace {

InverseProblem::InverseProblem(VectorXd m, VectorXd obs, double sr)
    : mask(std::move(m)), observation(std::move(obs)), sigma_r(sr) {
  require(mask.size() == observation.size(), "InverseProblem: mask and observation lengths differ");
  require(sigma_r >= 0.0 && std::isfinite(sigma_r), "InverseProblem: sigma_r must be finite and >= 0");
  require(((mask.array() == 0.0) || (mask.array() == 1.0)).all(), "InverseProblem: mask must be 0/1");
  require(observation.allFinite(), "InverseProblem: observation must be finite");
  observation = mask.cwiseProduct(observation);
}

InverseProblem InverseProblem::from_operator(const MaskedChannelOp<double>& op, const ComplexVector<double>& r,
                                             double sigma_r) {
  return InverseProblem(op.chunk_mask(), pinv_apply(op, r).re, sigma_r);
}

Eigen::Index InverseProblem::observed() const { return static_cast<Eigen::Index>(mask.sum()); }

double InverseProblem::residual(const VectorXd& x) const { return (range_part(x) - observation).norm(); }

CorrectionParams correction_params(const NoiseSchedule& schedule, double sigma_r, LambdaRule rule) {
  require(sigma_r >= 0.0, "correction_params: sigma_r must be >= 0");
  const int steps = schedule.steps();
  CorrectionParams p{VectorXd::Ones(steps), VectorXd::Zero(steps)};
  for (int t = 1; t <= steps; ++t) {
    const double a = schedule.x0_coef(t);
    const double s = schedule.sigma(t);
    double lambda = 1.0;
    if (s < a * sigma_r) lambda = rule == LambdaRule::saturating ? s / (a * sigma_r) : s / sigma_r;
    const double injected = a * lambda * sigma_r;
    p.lambda[t - 1] = lambda;
    p.gamma[t - 1] = std::max(0.0, schedule.variance(t) - injected * injected);
  }
  return p;
}

VectorXd rectify_x0(const VectorXd& x0t, const InverseProblem& problem) {
  require(x0t.size() == problem.dim(), "rectify_x0: signal length mismatch");
  return (problem.mask.array() != 0.0).select(problem.observation, x0t);
}

VectorXd rectify_x0_noisy(const VectorXd& x0t, const InverseProblem& problem, double lambda) {
  require(x0t.size() == problem.dim(), "rectify_x0_noisy: signal length mismatch");
  if (lambda == 1.0) return rectify_x0(x0t, problem);
  return x0t - lambda * (problem.range_part(x0t) - problem.observation);
}

VectorXd step(const VectorXd& xt, int t, const NoisePredictor& model, const InverseProblem& problem,
              const CorrectionParams& params, const NoiseSchedule& schedule, Rng& rng,
              const NullSpaceOptions& options, StepTrace* trace) {
  schedule.check_step(t);
  require(xt.size() == problem.dim(), "step: state length mismatch");
  const VectorXd x0t = diffusion::sampler_x0(model, xt, t, schedule, options.sampler);
  const double lambda = params.lambda_at(t);
  const VectorXd x0_hat = rectify_x0_noisy(x0t, problem, lambda);
  VectorXd next = diffusion::posterior_mean(x0_hat, xt, t, schedule);
  if (t > 1) {
    const double std = problem.noiseless() ? schedule.sigma(t) : std::sqrt(params.gamma_at(t));
    next += std * standard_normal(rng, xt.size());
  }
  if (trace) *trace = {t, problem.residual(x0_hat), lambda, params.gamma_at(t)};
  return next;
}

VectorXd sample(const NoisePredictor& model, const NoiseSchedule& schedule, const InverseProblem& problem, Rng& rng,
                const NullSpaceOptions& options, std::vector<StepTrace>* trace) {
  const CorrectionParams params = correction_params(schedule, problem.sigma_r, options.lambda_rule);
  VectorXd x = standard_normal(rng, problem.dim());
  if (trace) trace->clear();
  for (int t = schedule.steps(); t >= 1; --t) {
    StepTrace st;
    x = step(x, t, model, problem, params, schedule, rng, options, trace ? &st : nullptr);
    if (trace) trace->push_back(st);
  }
  return x;
}

double estimate_sigma_r(const VectorXd& r_observed, double sigma_channel) {
  require(r_observed.size() > 0, "estimate_sigma_r: empty observation");
  return (r_observed.maxCoeff() - r_observed.minCoeff()) * sigma_channel;
}

void write_trace_csv(std::ostream& os, const std::vector<StepTrace>& trace) {
  os << "t,residual,lambda,gamma\n";
  const auto old = os.precision(10);
  for (const auto& s : trace) os << s.t << ',' << s.residual << ',' << s.lambda << ',' << s.gamma << '\n';
  os.precision(old);
}

}  // namespace nsgc::nullspace
