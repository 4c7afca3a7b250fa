#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fixture.hpp"
#include "nsgc/datasets.hpp"
#include "nsgc/errors.hpp"
#include "nsgc/harness.hpp"

using namespace nsgc;
using namespace nsgc::harness;

#ifndef NSGC_SOURCE_DIR
#define NSGC_SOURCE_DIR "."
#endif

namespace {

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::string without_last_column(const std::string& csv) {
  std::string out;
  for (const auto& line : split_lines(csv)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

ExperimentConfig small_config(int images) {
  ExperimentConfig c;
  c.test_images = images;
  c.triptychs = false;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "K = 3\n"
      "M = 16\n"
      "ratios = [0.5, 0.25]   # trailing comment\n"
      "snrs_db = [inf, 0, -5]\n"
      "checkpoint = \"a # b.ckpt\"\n"
      "lambda_rule = \"literal\"\n"
      "x0_formula = literal\n"
      "sigma_r = 0.3\n"
      "chunk_mapping = contiguous\n");
  CHECK(c.users == 3);
  CHECK(c.chunks == 16);
  CHECK(c.ratios == std::vector<double>{0.5, 0.25});
  CHECK(std::isinf(c.snrs_db[0]));
  CHECK(c.snrs_db[2] == -5.0);
  CHECK(c.checkpoint == "a # b.ckpt");
  CHECK(c.lambda_rule == nullspace::LambdaRule::literal);
  CHECK(c.x0_formula == diffusion::X0Formula::literal);
  CHECK(c.sigma_r == 0.3);
  CHECK(c.chunk_mapping == ofdma::ChunkMapping::Mode::contiguous);

  const auto back = parse_config(to_text(c));
  CHECK(to_text(back) == to_text(c));
  CHECK(to_text(parse_config(to_text(ExperimentConfig{}))) == to_text(ExperimentConfig{}));

  CHECK_THROWS_AS(parse_config("bogus = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("K = two\n"), FormatError);
  CHECK_THROWS_AS(parse_config("ratios = [0.5, 1.5]\n").validate(), ContractError);
  CHECK_THROWS_AS(parse_config("M = 60\n").validate(), ContractError);
  CHECK(ExperimentConfig{}.transmitted_chunks(0.7) == 45);
}

TEST_CASE("grid layout") {
  const auto paper = load_config(NSGC_SOURCE_DIR "/configs/paper_grid.toml");
  const auto cells = grid_cells(paper);
  CHECK(cells.size() == 10);
  CHECK(cells[0].ratio == 0.7);
  CHECK(cells[0].snr_db == -10.0);
  CHECK(cells[9].ratio == 0.6);
  CHECK(cells[9].snr_db == 10.0);
  CHECK(cells[6].ratio_index == 1);
  CHECK(cells[6].snr_index == 1);
}

TEST_CASE("csv format") {
  const auto header = split_lines(csv_header())[0];
  CHECK(header.rfind("K,N,M,ratio,snr_db,seed,", 0) == 0);
  CHECK(header.substr(header.rfind(',') + 1) == "wall_seconds");

  ResultRecord r;
  r.snr_db = std::numeric_limits<double>::infinity();
  r.psnr_db = std::numeric_limits<double>::infinity();
  r.frechet = std::numeric_limits<double>::quiet_NaN();
  r.status = "error: bad, \"quoted\"";
  const auto row = csv_row(r);
  CHECK(row.find(",inf,") != std::string::npos);
  CHECK(row.find("\"error: bad, \"\"quoted\"\"\"") != std::string::npos);
  std::size_t commas = 0;
  for (char ch : header) commas += ch == ',';
  // the status field contributes one quoted comma
  std::size_t row_commas = 0;
  for (char ch : row) row_commas += ch == ',';
  CHECK(row_commas == commas + 1);
}

TEST_CASE("lossless and empty cells") {
  const auto& ck = desk_checkpoint();
  const auto cfg = small_config(6);
  const auto images = test_set(cfg);

  const auto full = run_cell(cfg, {1.0, INFINITY, 0, 0}, ck, images);
  REQUIRE(full.records.size() == 6);
  for (const auto& r : full.records) {
    CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.ber == 0.0);
    CHECK(r.n == 64);
    CHECK(r.sigma_r_source == "noiseless");
  }

  const auto none = run_cell(cfg, {0.0, INFINITY, 0, 0}, ck, images);
  for (const auto& r : none.records) {
    CHECK(r.n == 0);
    CHECK(std::isfinite(r.mse));
    CHECK(std::isfinite(r.ssim));
    CHECK(std::isfinite(r.psnr_db));
  }
  for (const auto& im : none.regenerated) CHECK(im.in_range());
}

TEST_CASE("ratio grid trend and baseline dominance") {
  const auto& ck = desk_checkpoint();
  auto cfg = small_config(20);
  const auto result = sweep(cfg, ck);
  REQUIRE(result.records.size() == 4 * 20);
  double prev = 2.0;
  for (std::size_t c = 0; c < 4; ++c) {
    double ssim = 0, base = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      ssim += result.records[c * 20 + i].ssim;
      base += result.records[c * 20 + i].baseline_ssim;
    }
    ssim /= 20;
    base /= 20;
    CHECK(ssim <= prev + 1e-12);
    CHECK(ssim >= base - 1e-12);
    prev = ssim;
  }
}

TEST_CASE("sweep output") {
  const auto& ck = desk_checkpoint();
  auto cfg = small_config(5);

  cfg.ratios = {};
  cfg.snrs_db = {};
  const auto empty = sweep(cfg, ck);
  CHECK(empty.csv == csv_header() + "\n");

  cfg.ratios = {0.8, 0.6};
  cfg.snrs_db = {INFINITY, 5.0};
  cfg.triptychs = true;
  const auto dir = std::filesystem::temp_directory_path() / "nsgc_sweep_test";
  std::filesystem::remove_all(dir);
  const auto a = sweep(cfg, ck, dir.string());
  CHECK(split_lines(a.csv).size() == 1 + 20);
  CHECK(std::filesystem::exists(dir / "results.csv"));
  CHECK(std::filesystem::exists(dir / "cell_r1_s1.pgm"));
  const auto trip = datasets::load_pgm((dir / "cell_r0_s0.pgm").string());
  CHECK(trip.shape == ImageShape{16, 16 * 3 + 2, 1});

  cfg.workers = 3;
  const auto b = sweep(cfg, ck);
  CHECK(without_last_column(a.csv) == without_last_column(b.csv));

  // the snr_db = 5 cells carry bit errors and a calibrated sigma_r
  for (const auto& r : a.records) {
    if (r.snr_db == 5.0) {
      CHECK(r.sigma_r_source == "calibration");
      CHECK(r.sigma_r > 0.0);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("sigma_r source precedence") {
  const auto& ck = desk_checkpoint();
  auto cfg = small_config(2);
  const auto images = test_set(cfg);
  const Cell noisy{1.0, 5.0, 0, 0};
  cfg.sigma_r_formula = true;
  CHECK(run_cell(cfg, noisy, ck, images).records[0].sigma_r_source == "formula");
  cfg.sigma_r = 0.25;
  const auto r = run_cell(cfg, noisy, ck, images).records[0];
  CHECK(r.sigma_r_source == "explicit");
  CHECK(r.sigma_r == 0.25);
}
