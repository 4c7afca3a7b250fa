#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nsgc/datasets.hpp"
#include "nsgc/errors.hpp"
#include "nsgc/rng.hpp"

using namespace nsgc;
using namespace nsgc::datasets;

namespace {

std::string tmp(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("generator") {
  const ToyDatasetSpec spec{{16, 16, 1}, 100, 71};
  const auto a = generate(spec), b = generate(spec);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);

  int per_class[kShapeClasses] = {};
  for (int i = 0; i < 100; ++i) ++per_class[static_cast<int>(class_of(i))];
  for (int c : per_class) CHECK(c == 25);

  for (const auto& im : a) CHECK(im.in_range());
  CHECK(generate({{16, 16, 1}, 5, 72})[0].values != a[0].values);
  CHECK_THROWS_AS(generate({{4, 4, 1}, 1, 0}), ContractError);
}

TEST_CASE("pixel histogram reaches both extremes") {
  const auto imgs = generate({{16, 16, 1}, 1000, 73});
  double lo = 0.0, hi = 0.0;
  for (const auto& im : imgs) {
    lo = std::min(lo, im.values.minCoeff());
    hi = std::max(hi, im.values.maxCoeff());
  }
  CHECK(lo == -1.0);
  CHECK(hi == 1.0);
}

TEST_CASE("pgm round trip") {
  Rng rng = make_rng(74, {});
  RealSignal x((standard_normal(rng, 35) * 0.5).cwiseMax(-1.0).cwiseMin(1.0), {5, 7, 1});
  const auto path = tmp("nsgc_rt.pgm");
  save_pgm(x, path);
  const auto y = load_pgm(path);
  CHECK(y.shape == x.shape);
  CHECK((y.values - x.values).cwiseAbs().maxCoeff() <= 1.0 / 255 + 1e-12);

  save_pgm(RealSignal(Eigen::VectorXd::Constant(4, -1.0), {2, 2, 1}), path);
  CHECK(load_pgm(path).values == Eigen::VectorXd::Constant(4, -1.0));
  save_pgm(RealSignal(Eigen::VectorXd::Constant(4, 1.0), {2, 2, 1}), path);
  CHECK(load_pgm(path).values == Eigen::VectorXd::Constant(4, 1.0));
  std::filesystem::remove(path);
}

TEST_CASE("hand-written pgm") {
  const auto path = tmp("nsgc_hand.pgm");
  {
    std::ofstream os(path, std::ios::binary);
    os << "P5\n# two by two\n2 2\n255\n";
    const unsigned char px[4] = {0, 128, 255, 64};
    os.write(reinterpret_cast<const char*>(px), 4);
  }
  const auto im = load_pgm(path);
  CHECK(im.shape == ImageShape{2, 2, 1});
  CHECK(im.at(0, 0) == -1.0);
  CHECK(im.at(0, 1) == doctest::Approx(2.0 * 128 / 255 - 1));
  CHECK(im.at(1, 0) == 1.0);
  CHECK(im.at(1, 1) == doctest::Approx(2.0 * 64 / 255 - 1));

  {
    std::ofstream os(path, std::ios::binary);
    os << "P5\n2 2\n65535\n";
  }
  CHECK_THROWS_AS(load_pgm(path), FormatError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(load_pgm(path), FormatError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "P5\n2 2\n255\n";
    os.put('\0');
  }
  CHECK_THROWS_AS(load_pgm(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("hconcat") {
  const RealSignal a(Eigen::VectorXd::Constant(6, -1.0), {2, 3, 1}), b(Eigen::VectorXd::Constant(4, 0.0), {2, 2, 1});
  const auto c = hconcat({a, b});
  CHECK(c.shape == ImageShape{2, 6, 1});
  CHECK(c.at(0, 3) == 1.0);
  CHECK(c.at(1, 5) == 0.0);
  CHECK(c.at(1, 0) == -1.0);
  CHECK_THROWS_AS(hconcat({a, RealSignal::zeros({3, 3, 1})}), ContractError);
}
