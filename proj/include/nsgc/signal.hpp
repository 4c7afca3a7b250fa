#pragma once

#include <Eigen/Core>

#include <cstddef>

#include "nsgc/errors.hpp"

namespace nsgc {

struct ImageShape {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  Eigen::Index channels = 1;

  Eigen::Index size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

/// Real-valued signal in normalized units, row-major pixels (channel fastest).
/// Nominal range is [-1, 1].
struct RealSignal {
  Eigen::VectorXd values;
  ImageShape shape;

  RealSignal() = default;
  RealSignal(Eigen::VectorXd v, ImageShape s) : values(std::move(v)), shape(s) {
    require(values.size() == shape.size(), "RealSignal: values length must equal product of shape");
  }

  /// 1-D signal of length n (height 1, width n).
  static RealSignal line(Eigen::VectorXd v) {
    const ImageShape s{1, v.size(), 1};
    return RealSignal(std::move(v), s);
  }

  static RealSignal zeros(ImageShape s) { return RealSignal(Eigen::VectorXd::Zero(s.size()), s); }

  Eigen::Index size() const { return values.size(); }

  double& at(Eigen::Index row, Eigen::Index col, Eigen::Index ch = 0) {
    return values[(row * shape.width + col) * shape.channels + ch];
  }
  double at(Eigen::Index row, Eigen::Index col, Eigen::Index ch = 0) const {
    return values[(row * shape.width + col) * shape.channels + ch];
  }

  bool in_range(double lo = -1.0, double hi = 1.0) const {
    return values.allFinite() && (values.array() >= lo).all() && (values.array() <= hi).all();
  }
};

}  // namespace nsgc
