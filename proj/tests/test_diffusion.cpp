#include <doctest.h>

#include <cmath>

#include "nsgc/diffusion.hpp"
#include "nsgc/errors.hpp"

using namespace nsgc;
using namespace nsgc::diffusion;

namespace {

struct ZeroModel : NoisePredictor {
  VectorXd predict_noise(const VectorXd& xt, int) const override { return VectorXd::Zero(xt.size()); }
};

struct FixedNoise : NoisePredictor {
  VectorXd eps;
  VectorXd predict_noise(const VectorXd&, int) const override { return eps; }
};

}  // namespace

TEST_CASE("schedule arithmetic") {
  const NoiseSchedule one(VectorXd::Constant(1, 0.3));
  CHECK(one.alpha_bar(1) == doctest::Approx(0.7));
  CHECK(one.alpha_bar(0) == 1.0);
  CHECK(one.sigma(1) == 0.0);

  const auto def = linear_schedule(1000);
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
  CHECK(def.alpha_bar(1000) == doctest::Approx(prod).epsilon(1e-12));
  CHECK(def.alpha_bar(1000) < 1e-4);

  const auto flat = linear_schedule(50, 0.01, 0.01);
  for (int t : {1, 10, 50}) CHECK(flat.alpha_bar(t) == doctest::Approx(std::pow(0.99, t)).epsilon(1e-12));

  for (int t = 2; t <= 1000; t += 97) {
    const double ab = def.alpha_bar(t), abp = def.alpha_bar(t - 1);
    CHECK(def.variance(t) == doctest::Approx((1 - abp) / (1 - ab) * def.beta(t)));
    CHECK(def.x0_coef(t) == doctest::Approx(std::sqrt(abp) * def.beta(t) / (1 - ab)));
    CHECK(def.xt_coef(t) == doctest::Approx(std::sqrt(def.alpha(t)) * (1 - abp) / (1 - ab)));
  }
  CHECK_THROWS_AS(def.check_step(0), ContractError);
  CHECK_THROWS_AS(def.check_step(1001), ContractError);
  CHECK_THROWS_AS(NoiseSchedule(VectorXd::Constant(3, 1.5)), ContractError);
}

TEST_CASE("forward marginal") {
  const auto s = linear_schedule(1000);
  Rng rng = make_rng(31, {});
  const VectorXd x0 = standard_normal(rng, 16);
  CHECK(forward_sample(x0, 300, VectorXd::Zero(16), s) == std::sqrt(s.alpha_bar(300)) * x0);

  const VectorXd eps = standard_normal(rng, 16);
  CHECK((forward_sample(x0, 1000, eps, s) - eps).norm() / eps.norm() < 0.02);

  const int n = 20000;
  VectorXd sum = VectorXd::Zero(4), sq = VectorXd::Zero(4);
  const VectorXd y0 = x0.head(4);
  for (int i = 0; i < n; ++i) {
    const VectorXd xt = forward_sample(y0, 500, standard_normal(rng, 4), s);
    sum += xt;
    sq += xt.cwiseProduct(xt);
  }
  const double ab = s.alpha_bar(500);
  const VectorXd mean = sum / n;
  const VectorXd var = sq / n - mean.cwiseProduct(mean);
  for (Index i = 0; i < 4; ++i) CHECK(std::abs(mean[i] - std::sqrt(ab) * y0[i]) < 4 * std::sqrt((1 - ab) / n));
  CHECK(std::abs(var.mean() / (1 - ab) - 1) < 0.03);
}

TEST_CASE("clean-signal prediction") {
  const auto s = linear_schedule(1000);
  Rng rng = make_rng(32, {});
  const VectorXd x0 = standard_normal(rng, 8);
  FixedNoise oracle;
  oracle.eps = standard_normal(rng, 8);
  for (int t : {1, 10, 400, 1000}) {
    const VectorXd xt = forward_sample(x0, t, oracle.eps, s);
    CHECK((predict_x0(oracle, xt, t, s) - x0).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, 1.0 / std::sqrt(s.alpha_bar(t))));
    CHECK((predict_x0(ZeroModel{}, xt, t, s) - xt / std::sqrt(s.alpha_bar(t))).cwiseAbs().maxCoeff() < 1e-12);
    const VectorXd lit = predict_x0(oracle, xt, t, s, X0Formula::literal);
    CHECK((lit - (xt - oracle.eps) / std::sqrt(s.alpha_bar(t))).cwiseAbs().maxCoeff() < 1e-12);
  }
  const VectorXd xt = forward_sample(x0, 1, oracle.eps, s);
  const VectorXd closed = xt - oracle.eps * std::sqrt(1 - s.alpha_bar(1)) / std::sqrt(s.alpha_bar(1));
  CHECK((predict_x0(oracle, xt, 1, s) - closed).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("posterior mean forms agree") {
  const auto s = linear_schedule(100);
  Rng rng = make_rng(33, {});
  const VectorXd x0 = standard_normal(rng, 6), eps = standard_normal(rng, 6);
  for (int t : {2, 50, 100}) {
    const VectorXd xt = forward_sample(x0, t, eps, s);
    const VectorXd a = posterior_mean(x0_from_noise(xt, eps, t, s), xt, t, s);
    CHECK((a - posterior_mean_eps(eps, xt, t, s)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ancestral sampling") {
  const NoiseSchedule one(VectorXd::Constant(1, 0.2));
  Rng a = make_rng(34, {}), b = make_rng(34, {});
  const VectorXd out = ancestral_sample(ZeroModel{}, one, a, 5, {X0Formula::corrected, false});
  const VectorXd xt = standard_normal(b, 5);
  CHECK((out - posterior_mean(xt / std::sqrt(0.8), xt, 1, one)).cwiseAbs().maxCoeff() < 1e-15);

  const auto s = linear_schedule(20);
  Rng c = make_rng(35, {}), d = make_rng(35, {});
  CHECK(ancestral_sample(ZeroModel{}, s, c, 7) == ancestral_sample(ZeroModel{}, s, d, 7));
  Rng e = make_rng(36, {});
  CHECK(ancestral_sample(ZeroModel{}, s, e, ImageShape{2, 3, 1}).shape == ImageShape{2, 3, 1});
}
