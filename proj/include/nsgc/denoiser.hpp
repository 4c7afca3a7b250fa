#pragma once

// Reference noise predictor: a two-hidden-layer perceptron over the flattened
// signal concatenated with a sinusoidal time embedding, trained on the
// eps-prediction objective with hand-written backpropagation and Adam.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nsgc/diffusion.hpp"
#include "nsgc/signal.hpp"

namespace nsgc::diffusion {

using Eigen::MatrixXd;

struct DenoiserArch {
  Index dim = 0;
  Index hidden = 256;
  Index time_embed = 32;

  Index param_count() const {
    const Index in = dim + time_embed;
    return hidden * in + hidden + hidden * hidden + hidden + dim * hidden + dim;
  }
  bool operator==(const DenoiserArch&) const = default;
};

/// [sin(t w_0) .. sin(t w_{h-1}), cos(t w_0) .. cos(t w_{h-1})], w_i = 10000^(-i/h), h = size/2.
VectorXd time_embedding(int t, Index size);

class DenoiserModel : public NoisePredictor {
 public:
  DenoiserModel() = default;
  DenoiserModel(DenoiserArch arch, VectorXd params);

  /// Gaussian init scaled by 1/sqrt(fan_in); output layer scaled down, biases zero.
  static DenoiserModel initialize(DenoiserArch arch, std::uint64_t seed);
  static DenoiserModel zeros(DenoiserArch arch);

  VectorXd predict_noise(const VectorXd& xt, int t) const override;
  /// Columns of `xt` are independent samples at steps `ts`.
  MatrixXd forward(const MatrixXd& xt, std::span<const int> ts) const;

  const DenoiserArch& arch() const { return arch_; }
  const VectorXd& params() const { return params_; }
  VectorXd& params() { return params_; }

 private:
  DenoiserArch arch_;
  VectorXd params_;
};

/// One minibatch: column b is (x0_b, t_b, eps_b).
struct Batch {
  MatrixXd x0;
  std::vector<int> t;
  MatrixXd eps;
};

/// || eps - model(sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, t) ||^2.
double training_loss(const NoisePredictor& model, const VectorXd& x0, int t, const VectorXd& eps,
                     const NoiseSchedule& schedule);

struct LossGradient {
  double loss = 0.0;  // batch mean of training_loss
  VectorXd gradient;  // d loss / d params
};

LossGradient loss_gradient(const DenoiserModel& model, const Batch& batch, const NoiseSchedule& schedule);

struct TrainConfig {
  int steps = 2000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double ema_decay = 0.0;      // 0 disables the parameter moving average
  double target_loss = 0.0;    // stop early once the running loss drops below this
  std::uint64_t seed = 0;
};

struct TrainState {
  DenoiserModel model;
  VectorXd first_moment;
  VectorXd second_moment;
  VectorXd ema;
  long step = 0;
  double running_loss = 0.0;
  double initial_loss = 0.0;
};

using TrainCallback = std::function<void(const TrainState&)>;

/// Deterministic given `config.seed`. Returns the EMA weights when ema_decay > 0.
TrainState train(std::span<const RealSignal> dataset, const NoiseSchedule& schedule, const DenoiserArch& arch,
                 const TrainConfig& config, const TrainCallback& on_step = {});

struct Checkpoint {
  DenoiserModel model;
  ImageShape shape;
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::uint64_t seed = 0;

  NoiseSchedule schedule() const { return linear_schedule(steps, beta_start, beta_end); }
};

/// Text header ("nsgc-ddpm 1", key/value lines, "end") followed by the parameters as
/// little-endian IEEE-754 doubles.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nsgc::diffusion
