#pragma once

// 16QAM physical layer: pixel quantization, Gray-labelled square constellation,
// AWGN at a per-symbol Es/N0, and bit error counting.

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nsgc/linop.hpp"
#include "nsgc/rng.hpp"
#include "nsgc/signal.hpp"

namespace nsgc::modem {

using Bits = std::vector<std::uint8_t>;
using Symbols = ComplexVector<double>;

/// Square 16QAM with unit average energy. Bits b0 b1 pick the in-phase level and
/// b2 b3 the quadrature level, each through the 2-bit Gray code 00,01,11,10 -> -3,-1,+1,+3.
struct QamConfig {
  static constexpr int order = 16;
  static constexpr int bits_per_symbol = 4;

  std::array<std::complex<double>, 16> constellation;  // indexed by b0b1b2b3 read as an integer

  static const QamConfig& gray16();
  double mean_energy() const;
};

/// Es/N0 in dB. +inf means a noiseless channel.
struct SnrSpec {
  double snr_db = std::numeric_limits<double>::infinity();

  static SnrSpec noiseless() { return {}; }
  static SnrSpec db(double v) { return {v}; }
  bool is_noiseless() const { return snr_db == std::numeric_limits<double>::infinity(); }
  /// N0 for a unit-energy constellation.
  double noise_power(double es = 1.0) const;
};

struct QuantizedBits {
  Bits bits;
  std::size_t saturated = 0;  // samples outside [-1, 1], clamped before quantization
};

/// Mid-rise uniform quantizer over [-1, 1], MSB first per sample.
QuantizedBits quantize(std::span<const double> samples, int bits_per_sample = 8);
QuantizedBits quantize(const RealSignal& signal, int bits_per_sample = 8);
Eigen::VectorXd dequantize(std::span<const std::uint8_t> bits, int bits_per_sample = 8);
RealSignal dequantize(std::span<const std::uint8_t> bits, ImageShape shape, int bits_per_sample = 8);
/// dequantize(quantize(x)) without the bit detour.
double quantize_level(double x, int bits_per_sample = 8);

Symbols modulate(std::span<const std::uint8_t> bits);
/// Minimum-distance hard decisions.
Bits demodulate(const Symbols& symbols);

/// Adds CN(0, N0) with N0 = Es / 10^(snr/10), Es measured on the block.
Symbols awgn(const Symbols& symbols, SnrSpec snr, Rng& rng);

double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

/// Exact Gray 16QAM bit error rate on AWGN at the given Es/N0 (unit Es).
double gray16_ber(SnrSpec snr);

/// RMS pixel error of quantize -> modulate -> awgn -> demodulate -> dequantize on a
/// calibration block, against the block itself. Deterministic given the rng state.
double channel_sigma_to_pixel_sigma(SnrSpec snr, std::span<const double> calibration, Rng& rng);

}  // namespace nsgc::modem
