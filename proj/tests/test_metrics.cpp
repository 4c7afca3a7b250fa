#include <doctest.h>

#include <cmath>

#include "nsgc/datasets.hpp"
#include "nsgc/errors.hpp"
#include "nsgc/metrics.hpp"
#include "nsgc/rng.hpp"
#include "oracles.hpp"

using namespace nsgc;
using namespace nsgc::metrics;

TEST_CASE("psnr") {
  Rng rng = make_rng(61, {});
  const VectorXd x = standard_normal(rng, 50);
  CHECK(std::isinf(psnr(x, x)));
  CHECK(mse(x, x) == 0.0);
  const VectorXd y = x.array() + 0.1;
  CHECK(psnr(x, y) == doctest::Approx(10 * std::log10(4.0 / 0.01)));
  CHECK(psnr(x, y) == doctest::Approx(26.0206).epsilon(1e-5));

  const VectorXd z = standard_normal(rng, 50);
  const double m = (x - z).squaredNorm() / 50;
  CHECK(std::abs(psnr(x, z) - 10 * std::log10(4 / m)) < 1e-9);
  CHECK(psnr(x, z) > psnr(x, 2 * z - x));
}

TEST_CASE("ssim") {
  const auto imgs = datasets::generate({{16, 16, 1}, 4, 62});
  CHECK(ssim(imgs[0], imgs[0]) == doctest::Approx(1.0).epsilon(1e-12));

  RealSignal bin(VectorXd::Zero(256), {16, 16, 1});
  for (Index r = 0; r < 16; ++r)
    for (Index c = 0; c < 16; ++c) bin.at(r, c) = ((r / 3 + c / 5) % 2) ? 1.0 : 0.0;
  RealSignal inv(VectorXd::Ones(256) - bin.values, bin.shape);
  CHECK(ssim(bin, inv) < 0.0);

  Rng rng = make_rng(62, {});
  for (int i = 0; i < 3; ++i) {
    RealSignal noisy(imgs[static_cast<std::size_t>(i)].values + 0.4 * standard_normal(rng, 256), imgs[0].shape);
    CHECK(std::abs(ssim(imgs[static_cast<std::size_t>(i)], noisy) - oracle::ssim(imgs[static_cast<std::size_t>(i)], noisy)) < 1e-9);
    CHECK(ssim(noisy, imgs[static_cast<std::size_t>(i)]) == doctest::Approx(ssim(imgs[static_cast<std::size_t>(i)], noisy)).epsilon(1e-10));
  }
  RealSignal wide(standard_normal(rng, 9 * 20), {9, 20, 1}), wide2(standard_normal(rng, 9 * 20), {9, 20, 1});
  CHECK(std::abs(ssim(wide, wide2) - oracle::ssim(wide, wide2)) < 1e-9);
  CHECK_THROWS_AS(ssim(RealSignal::zeros({4, 4, 1}), RealSignal::zeros({4, 4, 1})), ContractError);
}

TEST_CASE("frechet distance") {
  Rng rng = make_rng(63, {});
  const VectorXd mu = standard_normal(rng, 3);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 3);
  const Eigen::MatrixXd cov = a * a.transpose() + Eigen::MatrixXd::Identity(3, 3);
  CHECK(std::abs(frechet_gaussian(mu, cov, mu, cov)) < 1e-9);

  CHECK(frechet_gaussian(VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1), VectorXd::Ones(1),
                         Eigen::MatrixXd::Constant(1, 1, 4.0)) == doctest::Approx(2.0).epsilon(1e-12));

  const Eigen::Vector3d d1(1.0, 4.0, 0.25), d2(9.0, 1.0, 0.5);
  const Eigen::Vector3d m1(0, 1, 2), m2(1, 1, -1);
  double want = (m1 - m2).squaredNorm();
  for (int i = 0; i < 3; ++i) want += std::pow(std::sqrt(d1[i]) - std::sqrt(d2[i]), 2);
  const double got = frechet_gaussian(m1, d1.asDiagonal().toDenseMatrix(), m2, d2.asDiagonal().toDenseMatrix());
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
  CHECK(frechet_gaussian(m2, d2.asDiagonal().toDenseMatrix(), m1, d1.asDiagonal().toDenseMatrix()) ==
        doctest::Approx(got).epsilon(1e-10));
}

TEST_CASE("feature statistics") {
  const ImageShape line{1, 2, 1};
  Eigen::Vector2d p(0, 0), q(2, 0);
  std::vector<RealSignal> same{RealSignal(p, line), RealSignal(p, line)};
  CHECK(feature_stats(same, identity_features()).second.isZero());

  std::vector<RealSignal> two{RealSignal(p, line), RealSignal(q, line)};
  const auto [mu, cov] = feature_stats(two, identity_features());
  CHECK(mu == Eigen::Vector2d(1, 0));
  CHECK(cov(0, 0) == doctest::Approx(2.0));
  CHECK(cov(0, 1) == 0.0);
  CHECK(cov(1, 1) == 0.0);

  Rng rng = make_rng(64, {});
  std::vector<RealSignal> draws;
  for (int i = 0; i < 10000; ++i) draws.emplace_back(standard_normal(rng, 3), ImageShape{1, 3, 1});
  const auto [m, c] = feature_stats(draws, identity_features());
  CHECK(m.cwiseAbs().maxCoeff() < 0.05);
  CHECK((c.diagonal().array() - 1.0).abs().maxCoeff() < 0.05);

  const auto imgs = datasets::generate({{16, 16, 1}, 2, 65});
  const VectorXd f = patch_mean_features(4)(imgs[0]);
  CHECK(f.size() == 16);
  double block = 0.0;
  for (Index r = 0; r < 4; ++r)
    for (Index cc = 0; cc < 4; ++cc) block += imgs[0].at(r, cc);
  CHECK(f[0] == doctest::Approx(block / 16));
}
