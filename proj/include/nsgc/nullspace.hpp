#pragma once

// Null-space diffusion sampling for masked inverse problems r = A x + n.
//
// At every reverse step the model's clean-signal estimate x_{0|t} is rectified
// in the range space of A (replaced by, or pulled toward, A^dagger r) while its
// null-space part is kept, and the rectified estimate drives the posterior mean.
// With measurement noise sigma_r > 0 the correction is scaled by lambda_t and the
// injected noise variance shrinks to gamma_t so that the total variance of x_{t-1}
// stays at the scheduled sigma_t^2.
//
// The problem is stored in signal space: a 0/1 mask (the diagonal of A^dagger A)
// and the observation A^dagger r. For the masked-diagonal operators used here that
// carries exactly the same information as (A, r).

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsgc/diffusion.hpp"
#include "nsgc/linop.hpp"
#include "nsgc/rng.hpp"

namespace nsgc::nullspace {

using diffusion::NoisePredictor;
using diffusion::NoiseSchedule;
using Eigen::VectorXd;

struct InverseProblem {
  VectorXd mask;         // 1 where the signal was observed
  VectorXd observation;  // A^dagger r; zero outside the mask
  double sigma_r = 0.0;

  InverseProblem() = default;
  InverseProblem(VectorXd mask, VectorXd observation, double sigma_r);

  /// From a structured operator and its (possibly noisy) measurement.
  static InverseProblem from_operator(const MaskedChannelOp<double>& op, const ComplexVector<double>& r,
                                      double sigma_r = 0.0);

  Eigen::Index dim() const { return mask.size(); }
  Eigen::Index observed() const;
  bool noiseless() const { return sigma_r == 0.0; }
  /// A^dagger A x.
  VectorXd range_part(const VectorXd& x) const { return mask.cwiseProduct(x); }
  /// || A^dagger A x - A^dagger r ||, the consistency residual in signal space.
  double residual(const VectorXd& x) const;
};

enum class LambdaRule {
  saturating,  // lambda_t = sigma_t / (a_t sigma_r) on the small-sigma branch
  literal,     // lambda_t = sigma_t / sigma_r on the small-sigma branch
};

struct CorrectionParams {
  VectorXd lambda;  // index t - 1
  VectorXd gamma;   // index t - 1

  double lambda_at(int t) const { return lambda[t - 1]; }
  double gamma_at(int t) const { return gamma[t - 1]; }
};

/// a_t = sqrt(abar_{t-1}) beta_t / (1 - abar_t); lambda_t = 1 when sigma_t >= a_t sigma_r,
/// otherwise the rule's small-sigma value; gamma_t = max(0, sigma_t^2 - (a_t lambda_t sigma_r)^2).
CorrectionParams correction_params(const NoiseSchedule& schedule, double sigma_r,
                                   LambdaRule rule = LambdaRule::saturating);

/// A^dagger r + (I - A^dagger A) x0t.
VectorXd rectify_x0(const VectorXd& x0t, const InverseProblem& problem);

/// x0t - lambda A^dagger (A x0t - r). lambda == 1 is exactly rectify_x0.
VectorXd rectify_x0_noisy(const VectorXd& x0t, const InverseProblem& problem, double lambda);

struct StepTrace {
  int t = 0;
  double residual = 0.0;  // || A x_hat_{0|t} - r || in signal space
  double lambda = 1.0;
  double gamma = 0.0;
};

struct NullSpaceOptions {
  diffusion::SamplerOptions sampler;
  LambdaRule lambda_rule = LambdaRule::saturating;
};

/// One reverse step x_t -> x_{t-1}. Noise std is sigma_t when the problem is noiseless,
/// sqrt(gamma_t) otherwise, and zero at t = 1.
VectorXd step(const VectorXd& xt, int t, const NoisePredictor& model, const InverseProblem& problem,
              const CorrectionParams& params, const NoiseSchedule& schedule, Rng& rng,
              const NullSpaceOptions& options = {}, StepTrace* trace = nullptr);

/// Full t = T..1 loop from x_T ~ N(0, I).
VectorXd sample(const NoisePredictor& model, const NoiseSchedule& schedule, const InverseProblem& problem, Rng& rng,
                const NullSpaceOptions& options = {}, std::vector<StepTrace>* trace = nullptr);

/// (max(r) - min(r)) * sigma_channel.
double estimate_sigma_r(const VectorXd& r_observed, double sigma_channel);

/// CSV with header t,residual,lambda,gamma.
void write_trace_csv(std::ostream& os, const std::vector<StepTrace>& trace);

}  // namespace nsgc::nullspace
