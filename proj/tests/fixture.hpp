#pragma once

// Desk-scale trained denoiser shared by the slower tests. Trained once with the default
// experiment config and cached next to the test binaries.

#include <filesystem>

#include "nsgc/denoiser.hpp"
#include "nsgc/harness.hpp"

#ifndef NSGC_TEST_CACHE_DIR
#define NSGC_TEST_CACHE_DIR "."
#endif

inline const nsgc::diffusion::Checkpoint& desk_checkpoint() {
  static const nsgc::diffusion::Checkpoint ckpt = [] {
    const nsgc::harness::ExperimentConfig config;
    const auto path = std::filesystem::path(NSGC_TEST_CACHE_DIR) / "desk_model.ckpt";
    if (std::filesystem::exists(path)) {
      try {
        auto c = nsgc::diffusion::load_checkpoint(path.string());
        if (c.shape == config.image_shape() && c.steps == config.steps && c.seed == config.seed &&
            c.model.arch().hidden == config.hidden)
          return c;
      } catch (const std::exception&) {
      }
    }
    auto c = nsgc::harness::train_model(config);
    nsgc::diffusion::save_checkpoint(c, path.string());
    return c;
  }();
  return ckpt;
}
