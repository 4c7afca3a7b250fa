#pragma once

// Independent reference computations used by the tests. Nothing here calls into the
// library code it checks: dense matrices and SVD for the operator algebra, direct
// window loops for SSIM, decision-region integrals for 16QAM BER.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "nsgc/linop.hpp"
#include "nsgc/signal.hpp"

namespace oracle {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Index = Eigen::Index;

inline MatrixXcd dense(const nsgc::MaskedChannelOp<double>& op) {
  MatrixXcd a = MatrixXcd::Zero(op.rows(), op.cols());
  for (Index i = 0; i < op.rank(); ++i)
    a(op.selected()[static_cast<std::size_t>(i)], op.slot_of()[static_cast<std::size_t>(i)]) = {op.gains().re[i],
                                                                                              op.gains().im[i]};
  return a;
}

inline MatrixXcd pinv(const MatrixXcd& a) {
  Eigen::JacobiSVD<MatrixXcd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-12 * std::max<double>(a.rows(), a.cols()) * (s.size() ? s[0] : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) inv[i] = 1.0 / s[i];
  MatrixXcd sinv = MatrixXcd::Zero(a.cols(), a.rows());
  for (Index i = 0; i < s.size(); ++i) sinv(i, i) = inv[i];
  return svd.matrixV() * sinv * svd.matrixU().adjoint();
}

inline VectorXcd to_complex(const nsgc::ComplexVector<double>& v) {
  VectorXcd out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = {v.re[i], v.im[i]};
  return out;
}

/// Mean of the per-window SSIM map, every 8x8 (or `win`) window at stride 1,
/// population statistics.
inline double ssim(const nsgc::RealSignal& x, const nsgc::RealSignal& y, int win = 8, double peak = 2.0) {
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  const int h = x.shape.height, w = x.shape.width;
  double total = 0.0;
  int count = 0;
  for (int r0 = 0; r0 + win <= h; ++r0) {
    for (int c0 = 0; c0 + win <= w; ++c0) {
      double mx = 0, my = 0;
      for (int r = r0; r < r0 + win; ++r)
        for (int c = c0; c < c0 + win; ++c) {
          mx += x.at(r, c, 0);
          my += y.at(r, c, 0);
        }
      const double n = win * win;
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cxy = 0;
      for (int r = r0; r < r0 + win; ++r)
        for (int c = c0; c < c0 + win; ++c) {
          const double a = x.at(r, c, 0) - mx, b = y.at(r, c, 0) - my;
          vx += a * a;
          vy += b * b;
          cxy += a * b;
        }
      vx /= n;
      vy /= n;
      cxy /= n;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Gray 4-PAM per axis, levels -3,-1,1,3 (scaled), labels 00,01,11,10, thresholds at
/// -2, 0, 2. Bit error probability averaged over levels and both bits, by integrating
/// the Gaussian over each wrong decision region.
inline double gray16_ber(double n0) {
  const double scale = 1.0 / std::sqrt(10.0);
  const double s = std::sqrt(n0 / 2.0);
  const double levels[4] = {-3, -1, 1, 3};
  const int labels[4] = {0b00, 0b01, 0b11, 0b10};
  const double edges[5] = {-INFINITY, -2, 0, 2, INFINITY};
  double errors = 0.0;
  for (int tx = 0; tx < 4; ++tx) {
    for (int rx = 0; rx < 4; ++rx) {
      const double lo = (edges[rx] - levels[tx]) * scale / s;
      const double hi = (edges[rx + 1] - levels[tx]) * scale / s;
      const double p = phi(hi) - phi(lo);
      errors += p * __builtin_popcount(static_cast<unsigned>(labels[tx] ^ labels[rx]));
    }
  }
  return errors / (4.0 * 2.0);
}

/// Dense L x M selection matrix B: column slot -> row subcarrier.
inline Eigen::MatrixXd selection(Index l, Index m, const std::vector<Index>& subcarriers,
                                 const std::vector<Index>& slots) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(l, m);
  for (std::size_t j = 0; j < subcarriers.size(); ++j) b(subcarriers[j], slots[j]) = 1.0;
  return b;
}

/// Best achievable total gain over every assignment of N subcarriers to each of K users.
inline double best_total_gain(const std::vector<std::vector<double>>& mag, int n) {
  const int k_users = static_cast<int>(mag.size());
  const int l = static_cast<int>(mag[0].size());
  std::vector<int> owner(static_cast<std::size_t>(l), 0);
  double best = -1.0;
  // enumerate owner vectors in base K with exactly n subcarriers per user
  long total = 1;
  for (int i = 0; i < l; ++i) total *= k_users;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<int> count(static_cast<std::size_t>(k_users), 0);
    double sum = 0.0;
    for (int i = 0; i < l; ++i) {
      const int k = static_cast<int>(c % k_users);
      c /= k_users;
      ++count[static_cast<std::size_t>(k)];
      sum += mag[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    }
    if (std::all_of(count.begin(), count.end(), [&](int v) { return v == n; })) best = std::max(best, sum);
  }
  return best;
}

}  // namespace oracle
