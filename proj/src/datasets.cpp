#include "nsgc/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

#include "nsgc/errors.hpp"
#include "nsgc/rng.hpp"

namespace nsgc::datasets {

namespace {

constexpr double kBackground = -1.0;
constexpr double kForeground = 1.0;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

void draw_bar(RealSignal& img, Rng& rng) {
  const int h = static_cast<int>(img.shape.height), w = static_cast<int>(img.shape.width);
  const bool vertical = uniform_int(rng, 0, 1) == 1;
  const int span = vertical ? h : w;
  const int across = vertical ? w : h;
  const int thick = uniform_int(rng, 2, std::max(2, across / 4));
  const int len = uniform_int(rng, span / 2, span);
  const int off_across = uniform_int(rng, 0, across - thick);
  const int off_along = uniform_int(rng, 0, span - len);
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < thick; ++j) {
      const int r = vertical ? off_along + i : off_across + j;
      const int c = vertical ? off_across + j : off_along + i;
      img.at(r, c) = kForeground;
    }
}

void draw_box(RealSignal& img, Rng& rng) {
  const int h = static_cast<int>(img.shape.height), w = static_cast<int>(img.shape.width);
  const int bh = uniform_int(rng, h / 4, (5 * h) / 8);
  const int bw = uniform_int(rng, w / 4, (5 * w) / 8);
  const int r0 = uniform_int(rng, 0, h - bh);
  const int c0 = uniform_int(rng, 0, w - bw);
  for (int r = r0; r < r0 + bh; ++r)
    for (int c = c0; c < c0 + bw; ++c) img.at(r, c) = kForeground;
}

void draw_disc(RealSignal& img, Rng& rng) {
  const int h = static_cast<int>(img.shape.height), w = static_cast<int>(img.shape.width);
  const double rmax = 0.35 * std::min(h, w);
  const double radius = uniform_real(rng, 0.15 * std::min(h, w), rmax);
  const double cy = uniform_real(rng, radius, h - radius);
  const double cx = uniform_real(rng, radius, w - radius);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
      if (dy * dy + dx * dx <= radius * radius) img.at(r, c) = kForeground;
    }
}

void draw_gradient(RealSignal& img, Rng& rng) {
  const int h = static_cast<int>(img.shape.height), w = static_cast<int>(img.shape.width);
  const int bh = uniform_int(rng, (3 * h) / 8, (3 * h) / 4);
  const int bw = uniform_int(rng, (3 * w) / 8, (3 * w) / 4);
  const int r0 = uniform_int(rng, 0, h - bh);
  const int c0 = uniform_int(rng, 0, w - bw);
  const int axis = uniform_int(rng, 0, 3);  // ramp direction: right, left, down, up
  for (int r = 0; r < bh; ++r)
    for (int c = 0; c < bw; ++c) {
      double u = (axis < 2) ? (c + 0.5) / bw : (r + 0.5) / bh;
      if (axis == 1 || axis == 3) u = 1.0 - u;
      img.at(r0 + r, c0 + c) = kBackground + (kForeground - kBackground) * u;
    }
}

void skip_ws_and_comments(std::istream& is) {
  for (;;) {
    const int ch = is.peek();
    if (ch == '#') {
      std::string dummy;
      std::getline(is, dummy);
    } else if (ch != EOF && std::isspace(ch)) {
      is.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& is, const std::string& path) {
  skip_ws_and_comments(is);
  long v = -1;
  if (!(is >> v) || v < 0) throw FormatError("pgm: malformed header in " + path);
  return v;
}

}  // namespace

const char* to_string(ShapeClass c) {
  switch (c) {
    case ShapeClass::bars: return "bars";
    case ShapeClass::boxes: return "boxes";
    case ShapeClass::discs: return "discs";
    case ShapeClass::gradients: return "gradients";
  }
  return "?";
}

ShapeClass class_of(int index) { return static_cast<ShapeClass>(index % kShapeClasses); }

std::vector<RealSignal> generate(const ToyDatasetSpec& spec) {
  require(spec.count >= 1, "generate: count must be >= 1");
  require(spec.shape.channels == 1, "generate: toy images are grayscale");
  require(spec.shape.height >= 8 && spec.shape.width >= 8, "generate: images must be at least 8x8");
  std::vector<RealSignal> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    RealSignal img(Eigen::VectorXd::Constant(spec.shape.size(), kBackground), spec.shape);
    Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(i)});
    switch (class_of(i)) {
      case ShapeClass::bars: draw_bar(img, rng); break;
      case ShapeClass::boxes: draw_box(img, rng); break;
      case ShapeClass::discs: draw_disc(img, rng); break;
      case ShapeClass::gradients: draw_gradient(img, rng); break;
    }
    out.push_back(std::move(img));
  }
  return out;
}

RealSignal load_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[2] = {0, 0};
  if (!is.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') throw FormatError("pgm: not a binary P5 file: " + path);
  const long width = read_header_int(is, path);
  const long height = read_header_int(is, path);
  const long maxval = read_header_int(is, path);
  if (maxval != 255) throw FormatError("pgm: unsupported depth (maxval " + std::to_string(maxval) + ") in " + path);
  if (width == 0 || height == 0) throw FormatError("pgm: empty image in " + path);
  if (!std::isspace(is.get())) throw FormatError("pgm: malformed header in " + path);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width * height));
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw FormatError("pgm: truncated pixel data in " + path);
  RealSignal s = RealSignal::zeros({height, width, 1});
  for (std::size_t i = 0; i < bytes.size(); ++i)
    s.values[static_cast<Eigen::Index>(i)] = 2.0 * static_cast<double>(bytes[i]) / 255.0 - 1.0;
  return s;
}

void save_pgm(const RealSignal& signal, const std::string& path) {
  require(signal.shape.channels == 1, "save_pgm: grayscale images only");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "P5\n" << signal.shape.width << ' ' << signal.shape.height << "\n255\n";
    std::vector<char> bytes(static_cast<std::size_t>(signal.size()));
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
      const double v = std::isnan(signal.values[i]) ? -1.0 : std::clamp(signal.values[i], -1.0, 1.0);
      bytes[static_cast<std::size_t>(i)] = static_cast<char>(static_cast<unsigned char>(std::lround((v + 1.0) * 127.5)));
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("short write on " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot rename to " + path);
}

RealSignal hconcat(const std::vector<RealSignal>& images, double gap) {
  require(!images.empty(), "hconcat: no images");
  const Eigen::Index h = images.front().shape.height;
  Eigen::Index w = 0;
  for (const auto& im : images) {
    require(im.shape.height == h && im.shape.channels == 1, "hconcat: images must be grayscale and equally tall");
    w += im.shape.width;
  }
  w += static_cast<Eigen::Index>(images.size()) - 1;
  RealSignal out(Eigen::VectorXd::Constant(h * w, gap), {h, w, 1});
  Eigen::Index col = 0;
  for (const auto& im : images) {
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < im.shape.width; ++c) out.at(r, col + c) = im.at(r, c);
    col += im.shape.width + 1;
  }
  return out;
}

}  // namespace nsgc::datasets
