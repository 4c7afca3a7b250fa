#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "nsgc/signal.hpp"

namespace nsgc::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct MetricReport {
  double mse = 0.0;
  double psnr_db = kInf;
  double ssim = 1.0;
  std::optional<double> frechet;
};

double mse(const VectorXd& x, const VectorXd& y);

/// 10 log10(peak^2 / mse); +inf for identical inputs.
double psnr(const VectorXd& x, const VectorXd& y, double peak = 2.0);

struct SsimOptions {
  Eigen::Index window = 8;
  double peak = 2.0;  // dynamic range of the pixel scale
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean local SSIM over every window x window position (stride 1, uniform weights,
/// population moments). Grayscale images only.
double ssim(const RealSignal& x, const RealSignal& y, const SsimOptions& options = {});

MetricReport compare(const RealSignal& reference, const RealSignal& test, const SsimOptions& options = {});

/// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}).
double frechet_gaussian(const VectorXd& mu_r, const MatrixXd& cov_r, const VectorXd& mu_g, const MatrixXd& cov_g);

using FeatureMap = std::function<VectorXd(const RealSignal&)>;

/// Raw pixels.
FeatureMap identity_features();
/// Mean of each non-overlapping patch x patch block.
FeatureMap patch_mean_features(Eigen::Index patch = 4);

/// Sample mean and unbiased covariance of the mapped features.
std::pair<VectorXd, MatrixXd> feature_stats(std::span<const RealSignal> samples, const FeatureMap& features);

}  // namespace nsgc::metrics
