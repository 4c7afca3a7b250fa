#include "nsgc/modem.hpp"

#include <algorithm>
#include <cmath>

namespace nsgc::modem {

namespace {

// Gray 2-bit label -> amplitude in units of 1/sqrt(10).
constexpr std::array<double, 4> kGrayLevel = {-3.0, -1.0, 3.0, 1.0};  // 00, 01, 10, 11
const double kScale = 1.0 / std::sqrt(10.0);

int slice_axis(double v) {
  // Decision regions in units of kScale: (-inf,-2) (-2,0) (0,2) (2,inf) -> labels 00 01 11 10.
  const double u = v / kScale;
  if (u < -2.0) return 0b00;
  if (u < 0.0) return 0b01;
  if (u < 2.0) return 0b11;
  return 0b10;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

const QamConfig& QamConfig::gray16() {
  static const QamConfig cfg = [] {
    QamConfig c{};
    for (int idx = 0; idx < 16; ++idx)
      c.constellation[static_cast<std::size_t>(idx)] = {kGrayLevel[static_cast<std::size_t>(idx >> 2)] * kScale,
                                                        kGrayLevel[static_cast<std::size_t>(idx & 3)] * kScale};
    return c;
  }();
  return cfg;
}

double QamConfig::mean_energy() const {
  double e = 0.0;
  for (const auto& p : constellation) e += std::norm(p);
  return e / static_cast<double>(constellation.size());
}

double SnrSpec::noise_power(double es) const {
  if (is_noiseless()) return 0.0;
  return es / std::pow(10.0, snr_db / 10.0);
}

QuantizedBits quantize(std::span<const double> samples, int bits_per_sample) {
  require(bits_per_sample >= 1 && bits_per_sample <= 16, "quantize: bits_per_sample must be in [1, 16]");
  const long levels = 1L << bits_per_sample;
  QuantizedBits out;
  out.bits.reserve(samples.size() * static_cast<std::size_t>(bits_per_sample));
  for (double x : samples) {
    if (!(x >= -1.0 && x <= 1.0)) ++out.saturated;
    const double c = std::isnan(x) ? 0.0 : std::clamp(x, -1.0, 1.0);
    long q = static_cast<long>(std::floor((c + 1.0) * 0.5 * static_cast<double>(levels)));
    q = std::clamp(q, 0L, levels - 1);
    for (int b = bits_per_sample - 1; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>((q >> b) & 1));
  }
  return out;
}

QuantizedBits quantize(const RealSignal& signal, int bits_per_sample) {
  return quantize(std::span<const double>(signal.values.data(), static_cast<std::size_t>(signal.size())),
                  bits_per_sample);
}

Eigen::VectorXd dequantize(std::span<const std::uint8_t> bits, int bits_per_sample) {
  require(bits_per_sample >= 1 && bits_per_sample <= 16, "dequantize: bits_per_sample must be in [1, 16]");
  require(bits.size() % static_cast<std::size_t>(bits_per_sample) == 0,
          "dequantize: bit count must be a multiple of bits_per_sample");
  const double step = 2.0 / static_cast<double>(1L << bits_per_sample);
  const auto n = static_cast<Eigen::Index>(bits.size() / static_cast<std::size_t>(bits_per_sample));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    long q = 0;
    for (int b = 0; b < bits_per_sample; ++b)
      q = (q << 1) | (bits[static_cast<std::size_t>(i * bits_per_sample + b)] & 1);
    out[i] = -1.0 + (static_cast<double>(q) + 0.5) * step;
  }
  return out;
}

RealSignal dequantize(std::span<const std::uint8_t> bits, ImageShape shape, int bits_per_sample) {
  return RealSignal(dequantize(bits, bits_per_sample), shape);
}

double quantize_level(double x, int bits_per_sample) {
  const double d = x;
  return dequantize(quantize(std::span<const double>(&d, 1), bits_per_sample).bits, bits_per_sample)[0];
}

Symbols modulate(std::span<const std::uint8_t> bits) {
  require(bits.size() % 4 == 0, "modulate: bit count must be a multiple of 4");
  const auto& qam = QamConfig::gray16();
  const auto n = static_cast<Eigen::Index>(bits.size() / 4);
  auto out = Symbols::zeros(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto* b = &bits[static_cast<std::size_t>(4 * s)];
    const int idx = ((b[0] & 1) << 3) | ((b[1] & 1) << 2) | ((b[2] & 1) << 1) | (b[3] & 1);
    out.re[s] = qam.constellation[static_cast<std::size_t>(idx)].real();
    out.im[s] = qam.constellation[static_cast<std::size_t>(idx)].imag();
  }
  return out;
}

Bits demodulate(const Symbols& symbols) {
  Bits out;
  out.reserve(static_cast<std::size_t>(symbols.size()) * 4);
  for (Eigen::Index s = 0; s < symbols.size(); ++s) {
    const int i = slice_axis(symbols.re[s]);
    const int q = slice_axis(symbols.im[s]);
    out.push_back(static_cast<std::uint8_t>((i >> 1) & 1));
    out.push_back(static_cast<std::uint8_t>(i & 1));
    out.push_back(static_cast<std::uint8_t>((q >> 1) & 1));
    out.push_back(static_cast<std::uint8_t>(q & 1));
  }
  return out;
}

Symbols awgn(const Symbols& symbols, SnrSpec snr, Rng& rng) {
  if (snr.is_noiseless() || symbols.size() == 0) return symbols;
  require(std::isfinite(snr.snr_db), "awgn: SNR must be finite or +inf");
  const double es = symbols.squared_norm() / static_cast<double>(symbols.size());
  const double sigma = std::sqrt(snr.noise_power(es) / 2.0);
  std::normal_distribution<double> nd(0.0, sigma);
  Symbols out = symbols;
  for (Eigen::Index s = 0; s < out.size(); ++s) {
    out.re[s] += nd(rng);
    out.im[s] += nd(rng);
  }
  return out;
}

double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
  require(tx.size() == rx.size(), "ber: bit streams must have equal length");
  if (tx.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) errors += ((tx[i] ^ rx[i]) & 1);
  return static_cast<double>(errors) / static_cast<double>(tx.size());
}

double gray16_ber(SnrSpec snr) {
  if (snr.is_noiseless()) return 0.0;
  const double u = std::sqrt(1.0 / (5.0 * snr.noise_power()));
  return (3.0 * q_function(u) + 2.0 * q_function(3.0 * u) - q_function(5.0 * u)) / 4.0;
}

double channel_sigma_to_pixel_sigma(SnrSpec snr, std::span<const double> calibration, Rng& rng) {
  require(!calibration.empty(), "channel_sigma_to_pixel_sigma: empty calibration block");
  const auto q = quantize(calibration);
  const auto rx = demodulate(awgn(modulate(q.bits), snr, rng));
  const Eigen::VectorXd back = dequantize(rx);
  double sum = 0.0;
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const double e = back[static_cast<Eigen::Index>(i)] - std::clamp(calibration[i], -1.0, 1.0);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(calibration.size()));
}

}  // namespace nsgc::modem
