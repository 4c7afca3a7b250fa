#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "nsgc/datasets.hpp"
#include "nsgc/errors.hpp"
#include "nsgc/harness.hpp"
#include "nsgc/metrics.hpp"

namespace nsgc::harness {

namespace {

diffusion::Checkpoint obtain_checkpoint(const ExperimentConfig& config) {
  if (std::filesystem::exists(config.checkpoint)) {
    auto ckpt = diffusion::load_checkpoint(config.checkpoint);
    if (ckpt.shape == config.image_shape() && ckpt.steps == config.steps && ckpt.beta_start == config.beta_start &&
        ckpt.beta_end == config.beta_end)
      return ckpt;
    std::cerr << "checkpoint " << config.checkpoint << " does not match the config; retraining\n";
  } else {
    std::cerr << "no checkpoint at " << config.checkpoint << "; training one\n";
  }
  auto ckpt = train_model(config, &std::cerr);
  save_checkpoint(ckpt, config.checkpoint);
  return ckpt;
}

void print_summary(const std::vector<ResultRecord>& records) {
  for (const auto& r : records)
    std::cout << "N/M=" << r.ratio << " snr_db=" << r.snr_db << " image=" << r.image << " psnr_db=" << r.psnr_db
              << " ssim=" << r.ssim << " baseline_ssim=" << r.baseline_ssim << " ber=" << r.ber << ' ' << r.status
              << '\n';
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"Null-space diffusion regeneration of images lost in an OFDMA downlink"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "train the denoiser and write the checkpoint");

  auto* simulate = app.add_subcommand("simulate", "run one (N/M, SNR) cell");
  double ratio = 0.7;
  std::string snr = "inf";
  bool print_config = false;
  simulate->add_option("--ratio", ratio, "fraction N/M of chunks transmitted")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--snr", snr, "Es/N0 in dB, or inf");
  simulate->add_flag("--print-config", print_config, "print the effective config and exit");

  auto* sweep_cmd = app.add_subcommand("sweep", "run the full grid and write results.csv");

  auto* metrics_cmd = app.add_subcommand("metrics", "compare two PGM images");
  std::string pgm_a, pgm_b;
  metrics_cmd->add_option("reference", pgm_a)->required();
  metrics_cmd->add_option("test", pgm_b)->required();

  auto* selftest_cmd = app.add_subcommand("selftest", "quick invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    config.validate();

    if (*train) {
      auto ckpt = train_model(config, &std::cout);
      save_checkpoint(ckpt, config.checkpoint);
      std::cout << "wrote " << config.checkpoint << '\n';
    } else if (*simulate) {
      Cell cell;
      cell.ratio = ratio;
      cell.snr_db = snr == "inf" ? std::numeric_limits<double>::infinity() : std::stod(snr);
      if (print_config) {
        std::cout << to_text(config);
        return 0;
      }
      const auto ckpt = obtain_checkpoint(config);
      const auto out = run_cell(config, cell, ckpt, test_set(config));
      print_summary(out.records);
      std::filesystem::create_directories(out_dir);
      datasets::save_pgm(datasets::hconcat({out.originals[0], out.received[0], out.regenerated[0]}),
                         (std::filesystem::path(out_dir) / "simulate.pgm").string());
    } else if (*sweep_cmd) {
      const auto ckpt = obtain_checkpoint(config);
      const auto result = sweep(config, ckpt, out_dir);
      std::cout << "wrote " << (std::filesystem::path(out_dir) / "results.csv").string() << " ("
                << result.records.size() << " rows)\n";
    } else if (*metrics_cmd) {
      const auto a = datasets::load_pgm(pgm_a);
      const auto b = datasets::load_pgm(pgm_b);
      const auto rep = metrics::compare(a, b);
      std::cout << "mse=" << rep.mse << "\npsnr_db=" << rep.psnr_db << "\nssim=" << rep.ssim << '\n';
    } else if (*selftest_cmd) {
      return selftest(std::cout) ? 0 : 2;
    }
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace nsgc::harness
