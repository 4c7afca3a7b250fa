#pragma once

// Experiment orchestration: config file, the per-cell transmit/receive/regenerate
// pipeline, grid sweeps with CSV output, and the built-in invariant self test.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nsgc/denoiser.hpp"
#include "nsgc/diffusion.hpp"
#include "nsgc/nullspace.hpp"
#include "nsgc/ofdma.hpp"
#include "nsgc/signal.hpp"

namespace nsgc::harness {

struct ExperimentConfig {
  int users = 2;
  Index chunks = 64;  // M
  std::vector<double> ratios{1.0, 0.8, 0.7, 0.6};
  std::vector<double> snrs_db{std::numeric_limits<double>::infinity()};

  int steps = 200;
  double beta_start = 5e-4;
  double beta_end = 0.1;
  std::string checkpoint = "model.ckpt";

  int image_size = 16;
  int test_images = 8;
  std::uint64_t test_seed = 2024;

  int train_images = 2000;
  std::uint64_t train_seed = 1;
  int train_steps = 6000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  Index hidden = 256;
  Index time_embed = 32;
  double ema_decay = 0.995;

  std::uint64_t seed = 7;
  diffusion::X0Formula x0_formula = diffusion::X0Formula::corrected;
  nullspace::LambdaRule lambda_rule = nullspace::LambdaRule::saturating;
  bool clip_x0 = true;
  std::optional<double> sigma_r;
  bool sigma_r_formula = false;
  int calibration_images = 8;
  ofdma::ChunkMapping::Mode chunk_mapping = ofdma::ChunkMapping::Mode::patch_grid;
  int workers = 1;
  bool triptychs = true;

  ImageShape image_shape() const { return {image_size, image_size, 1}; }
  Index transmitted_chunks(double ratio) const;
  void validate() const;
};

/// key = value lines; '#' starts a comment; lists are [a, b, ...]; "inf" is accepted for SNRs.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string to_text(const ExperimentConfig& config);

struct Cell {
  double ratio = 1.0;
  double snr_db = std::numeric_limits<double>::infinity();
  int ratio_index = 0;
  int snr_index = 0;
};

std::vector<Cell> grid_cells(const ExperimentConfig& config);

struct ResultRecord {
  int users = 0;
  Index n = 0;
  Index m = 0;
  double ratio = 0.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  int image = 0;
  int user = 0;
  Index time_slots = 0;
  std::string x0_formula;
  std::string lambda_rule;
  double sigma_r = 0.0;
  std::string sigma_r_source;
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double frechet = 0.0;  // per cell, over patch-mean features; NaN with fewer than two images
  double ber = 0.0;
  double baseline_mse = 0.0;
  double baseline_psnr_db = 0.0;
  double baseline_ssim = 0.0;
  std::string status = "ok";
  double wall_seconds = 0.0;
};

/// Header row of the results CSV, one name per ResultRecord field in declaration order.
std::string csv_header();
std::string csv_row(const ResultRecord& r);

struct CellOutput {
  std::vector<ResultRecord> records;
  std::vector<RealSignal> originals;
  std::vector<RealSignal> received;     // zero-filled A^dagger r
  std::vector<RealSignal> regenerated;
};

/// Test images snapped onto the 8-bit quantizer grid, as transmitted.
std::vector<RealSignal> test_set(const ExperimentConfig& config);

/// Transmit every test image through one (N/M, SNR) cell and regenerate it.
/// Deterministic in (config, cell).
CellOutput run_cell(const ExperimentConfig& config, const Cell& cell, const diffusion::Checkpoint& ckpt,
                    const std::vector<RealSignal>& images);

struct SweepResult {
  std::vector<ResultRecord> records;
  std::string csv;
};

/// Runs every grid cell (concurrently up to config.workers, or NSGC_WORKERS when set),
/// merging in grid order. With a non-empty `out_dir`, writes results.csv atomically and one
/// PGM triptych per cell.
SweepResult sweep(const ExperimentConfig& config, const diffusion::Checkpoint& ckpt, const std::string& out_dir = "");

/// Trains the reference denoiser on the toy dataset described by the config.
diffusion::Checkpoint train_model(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Quick invariant checks; prints one line per check.
bool selftest(std::ostream& os);

/// Command-line entry point. 0 success, 1 usage error, 2 runtime failure.
int cli(int argc, char** argv);

}  // namespace nsgc::harness
