#include "nsgc/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "nsgc/errors.hpp"

namespace nsgc::metrics {

namespace {

// Summed-area table with a zero border: s(r, c) = sum of v over rows < r, cols < c.
MatrixXd summed_area(const Eigen::Ref<const MatrixXd>& v) {
  MatrixXd s = MatrixXd::Zero(v.rows() + 1, v.cols() + 1);
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    for (Eigen::Index c = 0; c < v.cols(); ++c) s(r + 1, c + 1) = v(r, c) + s(r, c + 1) + s(r + 1, c) - s(r, c);
  return s;
}

double box(const MatrixXd& s, Eigen::Index r, Eigen::Index c, Eigen::Index w) {
  return s(r + w, c + w) - s(r, c + w) - s(r + w, c) + s(r, c);
}

MatrixXd sym_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_covariance(const MatrixXd& c, Eigen::Index dim, const char* name) {
  require(c.rows() == dim && c.cols() == dim, std::string("frechet_gaussian: ") + name + " has wrong shape");
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-8, std::string("frechet_gaussian: ") + name +
                                                                   " is not symmetric");
}

}  // namespace

double mse(const VectorXd& x, const VectorXd& y) {
  require(x.size() == y.size(), "mse: shape mismatch");
  require(x.size() > 0, "mse: empty input");
  return (x - y).squaredNorm() / static_cast<double>(x.size());
}

double psnr(const VectorXd& x, const VectorXd& y, double peak) {
  require(peak > 0.0, "psnr: peak must be positive");
  const double e = mse(x, y);
  if (e == 0.0) return kInf;
  return 10.0 * std::log10(peak * peak / e);
}

double ssim(const RealSignal& x, const RealSignal& y, const SsimOptions& o) {
  require(x.shape == y.shape, "ssim: shape mismatch");
  require(x.shape.channels == 1, "ssim: grayscale images only");
  const Eigen::Index h = x.shape.height, w = x.shape.width, win = o.window;
  require(win >= 1 && h >= win && w >= win, "ssim: image smaller than window");

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> a(x.values.data(), h, w);
  const Eigen::Map<const RowMat> b(y.values.data(), h, w);
  const MatrixXd sa = summed_area(a), sb = summed_area(b);
  const MatrixXd saa = summed_area(a.cwiseAbs2()), sbb = summed_area(b.cwiseAbs2());
  const MatrixXd sab = summed_area(a.cwiseProduct(b));

  const double c1 = (o.k1 * o.peak) * (o.k1 * o.peak);
  const double c2 = (o.k2 * o.peak) * (o.k2 * o.peak);
  const double n = static_cast<double>(win * win);
  double total = 0.0;
  for (Eigen::Index r = 0; r + win <= h; ++r) {
    for (Eigen::Index c = 0; c + win <= w; ++c) {
      const double mx = box(sa, r, c, win) / n;
      const double my = box(sb, r, c, win) / n;
      const double vx = box(saa, r, c, win) / n - mx * mx;
      const double vy = box(sbb, r, c, win) / n - my * my;
      const double cxy = box(sab, r, c, win) / n - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>((h - win + 1) * (w - win + 1));
}

MetricReport compare(const RealSignal& reference, const RealSignal& test, const SsimOptions& options) {
  MetricReport r;
  r.mse = mse(reference.values, test.values);
  r.psnr_db = psnr(reference.values, test.values, options.peak);
  r.ssim = ssim(reference, test, options);
  return r;
}

double frechet_gaussian(const VectorXd& mu_r, const MatrixXd& cov_r, const VectorXd& mu_g, const MatrixXd& cov_g) {
  require(mu_r.size() == mu_g.size(), "frechet_gaussian: mean dimensions differ");
  check_covariance(cov_r, mu_r.size(), "cov_r");
  check_covariance(cov_g, mu_r.size(), "cov_g");
  const MatrixXd sr = 0.5 * (cov_r + cov_r.transpose());
  const MatrixXd sg = 0.5 * (cov_g + cov_g.transpose());
  // Tr((S_r S_g)^{1/2}) = Tr((S_r^{1/2} S_g S_r^{1/2})^{1/2}); the inner product is symmetric PSD.
  const MatrixXd root_r = sym_sqrt(sr);
  const MatrixXd inner = root_r * sg * root_r;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_r - mu_g).squaredNorm() + sr.trace() + sg.trace() - 2.0 * cross;
  return std::max(0.0, d);
}

FeatureMap identity_features() {
  return [](const RealSignal& s) { return s.values; };
}

FeatureMap patch_mean_features(Eigen::Index patch) {
  require(patch >= 1, "patch_mean_features: patch must be >= 1");
  return [patch](const RealSignal& s) {
    require(s.shape.height % patch == 0 && s.shape.width % patch == 0,
            "patch_mean_features: image does not tile into patches");
    const Eigen::Index gr = s.shape.height / patch, gc = s.shape.width / patch, ch = s.shape.channels;
    VectorXd f = VectorXd::Zero(gr * gc * ch);
    for (Eigen::Index r = 0; r < s.shape.height; ++r)
      for (Eigen::Index c = 0; c < s.shape.width; ++c)
        for (Eigen::Index k = 0; k < ch; ++k) f[((r / patch) * gc + c / patch) * ch + k] += s.at(r, c, k);
    return VectorXd(f / static_cast<double>(patch * patch));
  };
}

std::pair<VectorXd, MatrixXd> feature_stats(std::span<const RealSignal> samples, const FeatureMap& features) {
  require(samples.size() >= 2, "feature_stats: need at least two samples");
  const VectorXd first = features(samples.front());
  MatrixXd f(first.size(), static_cast<Eigen::Index>(samples.size()));
  f.col(0) = first;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    VectorXd v = features(samples[i]);
    require(v.size() == first.size(), "feature_stats: feature length varies across samples");
    f.col(static_cast<Eigen::Index>(i)) = v;
  }
  const VectorXd mu = f.rowwise().mean();
  const MatrixXd centered = f.colwise() - mu;
  MatrixXd cov = centered * centered.transpose() / static_cast<double>(f.cols() - 1);
  return {mu, cov};
}

}  // namespace nsgc::metrics
