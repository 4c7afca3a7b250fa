#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsgc/signal.hpp"

namespace nsgc::datasets {

enum class ShapeClass { bars, boxes, discs, gradients };
inline constexpr int kShapeClasses = 4;

const char* to_string(ShapeClass c);

/// Procedural toy images: one shape per image on a -1 background, foreground
/// up to +1. Image i belongs to class i mod 4.
struct ToyDatasetSpec {
  ImageShape shape{16, 16, 1};
  int count = 100;
  std::uint64_t seed = 0;
};

std::vector<RealSignal> generate(const ToyDatasetSpec& spec);
ShapeClass class_of(int index);

/// Binary PGM (P5), maxval 255. Pixel p maps to 2p/255 - 1.
RealSignal load_pgm(const std::string& path);
/// Values are clamped to [-1, 1] and rounded to the nearest byte.
void save_pgm(const RealSignal& signal, const std::string& path);

/// Side-by-side concatenation of equally tall grayscale images with a 1-pixel
/// separator column at value `gap`.
RealSignal hconcat(const std::vector<RealSignal>& images, double gap = 1.0);

}  // namespace nsgc::datasets
