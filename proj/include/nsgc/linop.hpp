#pragma once

// Structured per-user degradation A = H * B: subcarrier selection followed by a
// diagonal channel. Every row and column of A has at most one nonzero, so the
// pseudo-inverse and both projectors are closed form and O(N).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nsgc/errors.hpp"

namespace nsgc {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Complex vector stored as parallel real arrays.
template <typename Scalar>
struct ComplexVector {
  VectorX<Scalar> re;
  VectorX<Scalar> im;

  ComplexVector() = default;
  ComplexVector(VectorX<Scalar> r, VectorX<Scalar> i) : re(std::move(r)), im(std::move(i)) {
    require(re.size() == im.size(), "ComplexVector: re/im length mismatch");
  }

  static ComplexVector zeros(Index n) { return {VectorX<Scalar>::Zero(n), VectorX<Scalar>::Zero(n)}; }

  template <typename Derived>
  static ComplexVector from_real(const Eigen::MatrixBase<Derived>& x) {
    return {x, VectorX<Scalar>::Zero(x.size())};
  }

  Index size() const { return re.size(); }
  bool all_finite() const { return re.allFinite() && im.allFinite(); }
  Scalar squared_norm() const { return re.squaredNorm() + im.squaredNorm(); }
};

/// Per-subcarrier frequency-domain gains of one user.
template <typename Scalar>
struct DiagonalChannel {
  ComplexVector<Scalar> gains;

  static DiagonalChannel unit(Index subcarriers) {
    return {{VectorX<Scalar>::Ones(subcarriers), VectorX<Scalar>::Zero(subcarriers)}};
  }

  Index size() const { return gains.size(); }
  Scalar magnitude(Index l) const { return std::hypot(gains.re[l], gains.im[l]); }
};

template <typename Scalar>
class MaskedChannelOp {
 public:
  MaskedChannelOp() = default;

  /// `selected[i]` is a subcarrier in [0, L) carrying signal chunk `slot_of[i]` in [0, M)
  /// with gain `gains[i]`.
  MaskedChannelOp(Index subcarriers, Index signal_length, std::vector<Index> selected,
                  std::vector<Index> slot_of, ComplexVector<Scalar> gains)
      : subcarriers_(subcarriers),
        signal_length_(signal_length),
        selected_(std::move(selected)),
        slot_of_(std::move(slot_of)),
        gains_(std::move(gains)) {
    const auto n = static_cast<Index>(selected_.size());
    require(static_cast<Index>(slot_of_.size()) == n && gains_.size() == n,
            "MaskedChannelOp: selected/slot_of/gains length mismatch");
    require(n <= signal_length_ && n <= subcarriers_, "MaskedChannelOp: need N <= min(M, L)");
    require(distinct_in_range(selected_, subcarriers_), "MaskedChannelOp: selected subcarriers must be distinct and in [0, L)");
    require(distinct_in_range(slot_of_, signal_length_), "MaskedChannelOp: chunk slots must be distinct and in [0, M)");
    require(gains_.all_finite(), "MaskedChannelOp: gains must be finite");
    for (Index i = 0; i < n; ++i) {
      if (gains_.re[i] == Scalar(0) && gains_.im[i] == Scalar(0))
        throw SingularOperatorError("MaskedChannelOp: zero gain on selected subcarrier " +
                                    std::to_string(selected_[i]));
    }
  }

  /// Pure selection with unit gains.
  static MaskedChannelOp mask(Index subcarriers, Index signal_length, std::vector<Index> selected,
                              std::vector<Index> slot_of) {
    const auto n = static_cast<Index>(selected.size());
    return MaskedChannelOp(subcarriers, signal_length, std::move(selected), std::move(slot_of),
                           {VectorX<Scalar>::Ones(n), VectorX<Scalar>::Zero(n)});
  }

  static MaskedChannelOp identity(Index m) {
    std::vector<Index> idx(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
    return mask(m, m, idx, idx);
  }

  Index rows() const { return subcarriers_; }
  Index cols() const { return signal_length_; }
  Index rank() const { return static_cast<Index>(selected_.size()); }
  const std::vector<Index>& selected() const { return selected_; }
  const std::vector<Index>& slot_of() const { return slot_of_; }
  const ComplexVector<Scalar>& gains() const { return gains_; }

  /// Diagonal of A^dagger A: 1 on transmitted chunks, 0 elsewhere.
  VectorX<Scalar> chunk_mask() const {
    VectorX<Scalar> m = VectorX<Scalar>::Zero(signal_length_);
    for (Index s : slot_of_) m[s] = Scalar(1);
    return m;
  }

 private:
  static bool distinct_in_range(const std::vector<Index>& v, Index bound) {
    std::vector<Index> s(v);
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) return false;
    return s.empty() || (s.front() >= 0 && s.back() < bound);
  }

  Index subcarriers_ = 0;
  Index signal_length_ = 0;
  std::vector<Index> selected_;
  std::vector<Index> slot_of_;
  ComplexVector<Scalar> gains_;
};

/// Noiseless H*B*x. Output has length L with zeros on unselected subcarriers.
template <typename Scalar>
ComplexVector<Scalar> apply(const MaskedChannelOp<Scalar>& op, const ComplexVector<Scalar>& x) {
  require(x.size() == op.cols(), "apply: signal length must equal M");
  auto out = ComplexVector<Scalar>::zeros(op.rows());
  const auto& g = op.gains();
  for (Index i = 0; i < op.rank(); ++i) {
    const Index l = op.selected()[static_cast<std::size_t>(i)];
    const Index j = op.slot_of()[static_cast<std::size_t>(i)];
    out.re[l] = g.re[i] * x.re[j] - g.im[i] * x.im[j];
    out.im[l] = g.re[i] * x.im[j] + g.im[i] * x.re[j];
  }
  return out;
}

template <typename Scalar, typename Derived>
ComplexVector<Scalar> apply(const MaskedChannelOp<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  return apply(op, ComplexVector<Scalar>::from_real(x));
}

/// A^dagger r: divides each selected subcarrier by its gain and places it in its chunk slot.
template <typename Scalar>
ComplexVector<Scalar> pinv_apply(const MaskedChannelOp<Scalar>& op, const ComplexVector<Scalar>& r) {
  require(r.size() == op.rows(), "pinv_apply: observation length must equal L");
  auto out = ComplexVector<Scalar>::zeros(op.cols());
  const auto& g = op.gains();
  for (Index i = 0; i < op.rank(); ++i) {
    const Index l = op.selected()[static_cast<std::size_t>(i)];
    const Index j = op.slot_of()[static_cast<std::size_t>(i)];
    if (g.im[i] == Scalar(0)) {
      out.re[j] = r.re[l] / g.re[i];
      out.im[j] = r.im[l] / g.re[i];
    } else {
      const Scalar den = g.re[i] * g.re[i] + g.im[i] * g.im[i];
      out.re[j] = (r.re[l] * g.re[i] + r.im[l] * g.im[i]) / den;
      out.im[j] = (r.im[l] * g.re[i] - r.re[l] * g.im[i]) / den;
    }
  }
  return out;
}

/// A^dagger A x. Keeps transmitted chunks, zeros the rest.
template <typename Scalar, typename Derived>
VectorX<Scalar> range_project(const MaskedChannelOp<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  require(x.size() == op.cols(), "range_project: signal length must equal M");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(op.cols());
  for (Index j : op.slot_of()) out[j] = x[j];
  return out;
}

/// (I - A^dagger A) x. Keeps lost chunks, zeros the rest.
template <typename Scalar, typename Derived>
VectorX<Scalar> null_project(const MaskedChannelOp<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  require(x.size() == op.cols(), "null_project: signal length must equal M");
  VectorX<Scalar> out = x;
  for (Index j : op.slot_of()) out[j] = Scalar(0);
  return out;
}

template <typename Scalar>
ComplexVector<Scalar> range_project(const MaskedChannelOp<Scalar>& op, const ComplexVector<Scalar>& x) {
  return {range_project(op, x.re), range_project(op, x.im)};
}

template <typename Scalar>
ComplexVector<Scalar> null_project(const MaskedChannelOp<Scalar>& op, const ComplexVector<Scalar>& x) {
  return {null_project(op, x.re), null_project(op, x.im)};
}

/// (range part, null part); the two parts sum to x exactly.
template <typename Scalar, typename Derived>
std::pair<VectorX<Scalar>, VectorX<Scalar>> decompose(const MaskedChannelOp<Scalar>& op,
                                                      const Eigen::MatrixBase<Derived>& x) {
  return {range_project(op, x), null_project(op, x)};
}

/// Text record: "L M N" on the first line, then one "subcarrier slot gain_re gain_im" line
/// per selected subcarrier. Gains are written with round-trip precision.
template <typename Scalar>
std::string to_record(const MaskedChannelOp<Scalar>& op) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<Scalar>::max_digits10);
  os << op.rows() << ' ' << op.cols() << ' ' << op.rank() << '\n';
  for (Index i = 0; i < op.rank(); ++i) {
    os << op.selected()[static_cast<std::size_t>(i)] << ' ' << op.slot_of()[static_cast<std::size_t>(i)] << ' '
       << op.gains().re[i] << ' ' << op.gains().im[i] << '\n';
  }
  return os.str();
}

template <typename Scalar>
MaskedChannelOp<Scalar> op_from_record(const std::string& text) {
  std::istringstream is(text);
  Index l = 0, m = 0, n = 0;
  if (!(is >> l >> m >> n) || n < 0) throw FormatError("operator record: bad header");
  std::vector<Index> sel(static_cast<std::size_t>(n)), slot(static_cast<std::size_t>(n));
  auto gains = ComplexVector<Scalar>::zeros(n);
  for (Index i = 0; i < n; ++i) {
    if (!(is >> sel[static_cast<std::size_t>(i)] >> slot[static_cast<std::size_t>(i)] >> gains.re[i] >> gains.im[i]))
      throw FormatError("operator record: truncated entry " + std::to_string(i));
  }
  return MaskedChannelOp<Scalar>(l, m, std::move(sel), std::move(slot), std::move(gains));
}

}  // namespace nsgc
