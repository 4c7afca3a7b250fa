#include <cmath>
#include <ostream>
#include <vector>

#include "nsgc/datasets.hpp"
#include "nsgc/harness.hpp"
#include "nsgc/linop.hpp"
#include "nsgc/metrics.hpp"
#include "nsgc/modem.hpp"
#include "nsgc/nullspace.hpp"
#include "nsgc/ofdma.hpp"

namespace nsgc::harness {

namespace {

bool check(std::ostream& os, const char* what, bool ok) {
  os << (ok ? "ok   " : "FAIL ") << what << '\n';
  return ok;
}

}  // namespace

bool selftest(std::ostream& os) {
  bool all = true;
  Rng rng = make_rng(99, {});

  {
    const Index k_users = 3, n = 4, m = 10, l = k_users * n;
    std::vector<ofdma::Channel> channels;
    for (Index k = 0; k < k_users; ++k) channels.push_back(ofdma::rayleigh_channel(l, rng));
    const auto plan = ofdma::allocate(channels, n);
    all &= check(os, "allocation is disjoint and saturated", plan.disjoint() && plan.saturated());

    std::vector<std::vector<Index>> slots;
    std::vector<ofdma::CVec> x;
    for (Index k = 0; k < k_users; ++k) {
      slots.push_back({0, 2, 5, 9});
      ofdma::CVec v{standard_normal(rng, m), standard_normal(rng, m)};
      x.push_back(v);
    }
    const auto y = ofdma::compose_downlink(plan, slots, x);
    double err = 0.0;
    for (Index k = 0; k < k_users; ++k) {
      const auto op = ofdma::build_operator(plan, k, channels[static_cast<std::size_t>(k)], slots[static_cast<std::size_t>(k)], m);
      const auto r = ofdma::receive(y, channels[static_cast<std::size_t>(k)], 0.0, rng);
      const auto a = pinv_apply(op, r);
      const auto want = range_project(op, x[static_cast<std::size_t>(k)]);
      err = std::max(err, (a.re - want.re).cwiseAbs().maxCoeff());
      err = std::max(err, (a.im - want.im).cwiseAbs().maxCoeff());
      const auto [rp, np] = decompose(op, x[static_cast<std::size_t>(k)].re);
      err = std::max(err, std::abs(rp.dot(np)));
    }
    all &= check(os, "noiseless downlink recovers every user's range part", err < 1e-10);
  }

  {
    std::vector<double> px(256);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = -1.0 + 2.0 * static_cast<double>(i) / 255.0;
    const auto q = modem::quantize(px);
    const auto back = modem::dequantize(modem::demodulate(modem::modulate(q.bits)));
    double err = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) err = std::max(err, std::abs(back[static_cast<Index>(i)] - px[i]));
    all &= check(os, "quantize/modulate/demodulate round trip within one level", err <= 2.0 / 256.0);
  }

  {
    const auto schedule = diffusion::linear_schedule(200, 5e-4, 0.1);
    bool ok = true;
    for (double sr : {0.0, 0.05, 0.2, 1.0}) {
      const auto p = nullspace::correction_params(schedule, sr);
      for (int t = 1; t <= schedule.steps(); ++t) {
        const double inj = schedule.x0_coef(t) * p.lambda_at(t) * sr;
        ok &= p.gamma_at(t) >= 0.0;
        if (p.gamma_at(t) > 0.0) ok &= std::abs(inj * inj + p.gamma_at(t) - schedule.variance(t)) < 1e-12;
      }
    }
    all &= check(os, "noise budget gamma + (a lambda sigma_r)^2 = sigma_t^2", ok);
  }

  {
    const auto imgs = datasets::generate({{16, 16, 1}, 2, 5});
    const double s = metrics::ssim(imgs[0], imgs[0]);
    all &= check(os, "ssim of an image with itself is 1", std::abs(s - 1.0) < 1e-12);
  }
  return all;
}

}  // namespace nsgc::harness
