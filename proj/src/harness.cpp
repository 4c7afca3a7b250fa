#include "nsgc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "nsgc/datasets.hpp"
#include "nsgc/errors.hpp"
#include "nsgc/metrics.hpp"
#include "nsgc/modem.hpp"

namespace nsgc::harness {

namespace {

constexpr int kBitsPerPixel = 8;

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* name(diffusion::X0Formula f) { return f == diffusion::X0Formula::corrected ? "corrected" : "literal"; }
const char* name(nullspace::LambdaRule r) { return r == nullspace::LambdaRule::saturating ? "saturating" : "literal"; }

ofdma::ChunkMapping mapping_for(const ExperimentConfig& c) {
  return c.chunk_mapping == ofdma::ChunkMapping::Mode::patch_grid
             ? ofdma::ChunkMapping::square_patches(c.image_shape(), c.chunks)
             : ofdma::ChunkMapping::contiguous(c.image_shape(), c.chunks);
}

std::uint64_t cell_seed(const ExperimentConfig& c, const Cell& cell) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(c.transmitted_chunks(cell.ratio)),
                              std::bit_cast<std::uint64_t>(cell.snr_db)});
}

/// Transmission order of an image's chunks; the first N are sent. Depends only on the image,
/// so lower ratios drop a superset of the chunks dropped at higher ratios.
std::vector<Index> chunk_order(const ExperimentConfig& c, int image) {
  std::vector<Index> order(static_cast<std::size_t>(c.chunks));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = make_rng(c.seed, {2, static_cast<std::uint64_t>(image)});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Per-axis noise std relative to the constellation's peak-to-peak amplitude.
double normalized_channel_sigma(const modem::SnrSpec& snr) {
  return std::sqrt(snr.noise_power() / 2.0) / (6.0 / std::sqrt(10.0));
}

struct UserTx {
  int image = 0;
  std::vector<Index> chunks;             // transmitted chunk indices, in subcarrier order
  std::vector<modem::Bits> bits;         // per transmitted chunk
  std::vector<modem::Symbols> symbols;   // per transmitted chunk, one per time slot
  std::vector<modem::Symbols> received;  // per transmitted chunk
};

}  // namespace

std::string csv_header() {
  return "K,N,M,ratio,snr_db,seed,image,user,time_slots,x0_formula,lambda_rule,sigma_r,sigma_r_source,"
         "mse,psnr_db,ssim,frechet,ber,baseline_mse,baseline_psnr_db,baseline_ssim,status,wall_seconds";
}

std::string csv_row(const ResultRecord& r) {
  std::ostringstream os;
  os << r.users << ',' << r.n << ',' << r.m << ',' << num(r.ratio) << ',' << num(r.snr_db) << ',' << r.seed << ','
     << r.image << ',' << r.user << ',' << r.time_slots << ',' << quote(r.x0_formula) << ',' << quote(r.lambda_rule)
     << ',' << num(r.sigma_r) << ',' << quote(r.sigma_r_source) << ',' << num(r.mse) << ',' << num(r.psnr_db) << ','
     << num(r.ssim) << ',' << num(r.frechet) << ',' << num(r.ber) << ',' << num(r.baseline_mse) << ','
     << num(r.baseline_psnr_db) << ',' << num(r.baseline_ssim) << ',' << quote(r.status) << ','
     << num(r.wall_seconds);
  return os.str();
}

std::vector<RealSignal> test_set(const ExperimentConfig& config) {
  auto images = datasets::generate({config.image_shape(), config.test_images, config.test_seed});
  for (auto& im : images)
    for (Index i = 0; i < im.size(); ++i) im.values[i] = modem::quantize_level(im.values[i], kBitsPerPixel);
  return images;
}

CellOutput run_cell(const ExperimentConfig& config, const Cell& cell, const diffusion::Checkpoint& ckpt,
                    const std::vector<RealSignal>& images) {
  require(!images.empty(), "run_cell: no test images");
  require(cell.ratio >= 0.0 && cell.ratio <= 1.0, "run_cell: N/M must lie in [0, 1]");
  require(ckpt.model.arch().dim == config.image_shape().size(), "run_cell: checkpoint does not match image size");
  const auto t_start = std::chrono::steady_clock::now();

  const auto mapping = mapping_for(config);
  const Index m = config.chunks;
  const Index n = config.transmitted_chunks(cell.ratio);
  const Index k_users = config.users;
  const Index subcarriers = k_users * n;
  const Index slots = mapping.pixels_per_chunk() * kBitsPerPixel / modem::QamConfig::bits_per_symbol;
  const modem::SnrSpec snr{cell.snr_db};
  const double sigma_n = std::sqrt(snr.noise_power());
  const std::uint64_t seed = cell_seed(config, cell);
  const auto schedule = ckpt.schedule();

  nullspace::NullSpaceOptions options;
  options.sampler.x0_formula = config.x0_formula;
  options.sampler.clip_x0 = config.clip_x0;
  options.lambda_rule = config.lambda_rule;

  double calibrated = 0.0;
  if (!snr.is_noiseless() && !config.sigma_r && !config.sigma_r_formula) {
    datasets::ToyDatasetSpec cal{config.image_shape(), config.calibration_images, derive_seed(config.seed, {4})};
    std::vector<double> block;
    for (const auto& im : datasets::generate(cal))
      for (Index i = 0; i < im.size(); ++i) block.push_back(modem::quantize_level(im.values[i], kBitsPerPixel));
    Rng rng = make_rng(seed, {4});
    calibrated = modem::channel_sigma_to_pixel_sigma(snr, block, rng);
  }

  const int count = static_cast<int>(images.size());
  CellOutput out;
  out.records.resize(static_cast<std::size_t>(count));
  out.originals = images;
  out.received.resize(static_cast<std::size_t>(count));
  out.regenerated.resize(static_cast<std::size_t>(count));

  const int groups = (count + static_cast<int>(k_users) - 1) / static_cast<int>(k_users);
  for (int g = 0; g < groups; ++g) {
    Rng ch_rng = make_rng(seed, {1, static_cast<std::uint64_t>(g)});
    std::vector<ofdma::Channel> channels;
    for (Index k = 0; k < k_users; ++k) channels.push_back(ofdma::rayleigh_channel(subcarriers, ch_rng));
    const auto plan = ofdma::allocate(channels, n);

    std::vector<UserTx> tx(static_cast<std::size_t>(k_users));
    std::vector<ofdma::Channel> effective;
    std::vector<ofdma::Op> ops;
    std::vector<std::vector<Index>> chunk_slots;
    for (Index k = 0; k < k_users; ++k) {
      auto& u = tx[static_cast<std::size_t>(k)];
      u.image = static_cast<int>((g * k_users + k) % count);
      const auto order = chunk_order(config, u.image);
      u.chunks.assign(order.begin(), order.begin() + n);
      const auto& img = images[static_cast<std::size_t>(u.image)];
      for (Index j : u.chunks) {
        std::vector<double> px;
        for (Index p : mapping.pixels(j)) px.push_back(img.values[p]);
        u.bits.push_back(modem::quantize(px, kBitsPerPixel).bits);
        u.symbols.push_back(modem::modulate(u.bits.back()));
        u.received.push_back(modem::Symbols::zeros(slots));
      }
      effective.push_back(ofdma::power_control(channels[static_cast<std::size_t>(k)], plan.per_user[static_cast<std::size_t>(k)]));
      ops.push_back(ofdma::build_operator(plan, k, effective.back(), u.chunks, m));
      chunk_slots.push_back(u.chunks);
    }

    std::vector<Rng> rx_rng;
    for (Index k = 0; k < k_users; ++k) rx_rng.push_back(make_rng(seed, {5, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(k)}));
    for (Index s = 0; s < slots; ++s) {
      std::vector<ofdma::CVec> x;
      for (const auto& u : tx) {
        auto v = ofdma::CVec::zeros(m);
        for (std::size_t j = 0; j < u.chunks.size(); ++j) {
          v.re[u.chunks[j]] = u.symbols[j].re[s];
          v.im[u.chunks[j]] = u.symbols[j].im[s];
        }
        x.push_back(std::move(v));
      }
      const auto y = ofdma::compose_downlink(plan, chunk_slots, x);
      for (Index k = 0; k < k_users; ++k) {
        auto& u = tx[static_cast<std::size_t>(k)];
        const auto r = ofdma::receive(y, effective[static_cast<std::size_t>(k)], sigma_n, rx_rng[static_cast<std::size_t>(k)]);
        const auto a = pinv_apply(ops[static_cast<std::size_t>(k)], r);
        for (std::size_t j = 0; j < u.chunks.size(); ++j) {
          u.received[j].re[s] = a.re[u.chunks[j]];
          u.received[j].im[s] = a.im[u.chunks[j]];
        }
      }
    }

    for (Index k = 0; k < k_users; ++k) {
      const int image = static_cast<int>(g * k_users + k);
      if (image >= count) break;
      const auto u_start = std::chrono::steady_clock::now();
      const auto& u = tx[static_cast<std::size_t>(k)];
      const auto& src = images[static_cast<std::size_t>(image)];

      Eigen::VectorXd observation = Eigen::VectorXd::Zero(src.size());
      std::size_t bit_errors = 0, bit_total = 0;
      for (std::size_t j = 0; j < u.chunks.size(); ++j) {
        const auto rx_bits = modem::demodulate(u.received[j]);
        for (std::size_t b = 0; b < rx_bits.size(); ++b) bit_errors += (rx_bits[b] ^ u.bits[j][b]) & 1;
        bit_total += rx_bits.size();
        const Eigen::VectorXd px = modem::dequantize(rx_bits, kBitsPerPixel);
        const auto& group = mapping.pixels(u.chunks[j]);
        for (std::size_t p = 0; p < group.size(); ++p) observation[group[p]] = px[static_cast<Index>(p)];
      }
      const Eigen::VectorXd mask = ofdma::pixel_mask(u.chunks, mapping);

      ResultRecord rec;
      if (snr.is_noiseless() && !config.sigma_r) {
        rec.sigma_r = 0.0;
        rec.sigma_r_source = "noiseless";
      } else if (config.sigma_r) {
        rec.sigma_r = *config.sigma_r;
        rec.sigma_r_source = "explicit";
      } else if (config.sigma_r_formula) {
        Eigen::VectorXd seen(static_cast<Index>(mask.sum()));
        Index w = 0;
        for (Index i = 0; i < mask.size(); ++i)
          if (mask[i] != 0.0) seen[w++] = observation[i];
        rec.sigma_r = seen.size() ? nullspace::estimate_sigma_r(seen, normalized_channel_sigma(snr)) : 0.0;
        rec.sigma_r_source = "formula";
      } else {
        rec.sigma_r = calibrated;
        rec.sigma_r_source = "calibration";
      }

      const nullspace::InverseProblem problem(mask, observation, rec.sigma_r);
      Rng sample_rng = make_rng(seed, {3, static_cast<std::uint64_t>(image)});
      const Eigen::VectorXd x = nullspace::sample(ckpt.model, schedule, problem, sample_rng, options);

      RealSignal regen(x.cwiseMax(-1.0).cwiseMin(1.0), src.shape);
      RealSignal received(problem.observation, src.shape);
      const auto rep = metrics::compare(src, regen);
      const auto base = metrics::compare(src, received);

      rec.users = static_cast<int>(k_users);
      rec.n = n;
      rec.m = m;
      rec.ratio = cell.ratio;
      rec.snr_db = cell.snr_db;
      rec.seed = config.seed;
      rec.image = image;
      rec.user = static_cast<int>(k);
      rec.time_slots = slots;
      rec.x0_formula = name(config.x0_formula);
      rec.lambda_rule = name(config.lambda_rule);
      rec.mse = rep.mse;
      rec.psnr_db = rep.psnr_db;
      rec.ssim = rep.ssim;
      rec.ber = bit_total ? static_cast<double>(bit_errors) / static_cast<double>(bit_total) : 0.0;
      rec.baseline_mse = base.mse;
      rec.baseline_psnr_db = base.psnr_db;
      rec.baseline_ssim = base.ssim;
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - u_start).count();

      out.records[static_cast<std::size_t>(image)] = rec;
      out.received[static_cast<std::size_t>(image)] = std::move(received);
      out.regenerated[static_cast<std::size_t>(image)] = std::move(regen);
    }
  }

  double frechet = std::numeric_limits<double>::quiet_NaN();
  if (count >= 2) {
    const auto features = metrics::patch_mean_features(4);
    const auto [mu_r, cov_r] = metrics::feature_stats(out.originals, features);
    const auto [mu_g, cov_g] = metrics::feature_stats(out.regenerated, features);
    frechet = metrics::frechet_gaussian(mu_r, cov_r, mu_g, cov_g);
  }
  for (auto& r : out.records) r.frechet = frechet;
  (void)t_start;
  return out;
}

SweepResult sweep(const ExperimentConfig& config, const diffusion::Checkpoint& ckpt, const std::string& out_dir) {
  config.validate();
  const auto cells = grid_cells(config);
  const auto images = test_set(config);

  int workers = config.workers;
  if (const char* env = std::getenv("NSGC_WORKERS")) workers = std::max(1, std::atoi(env));
  workers = std::min<int>(workers, std::max<std::size_t>(1, cells.size()));

  std::vector<CellOutput> outputs(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        outputs[i] = run_cell(config, cells[i], ckpt, images);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  SweepResult result;
  std::ostringstream csv;
  csv << csv_header() << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      ResultRecord r;
      r.users = config.users;
      r.n = config.transmitted_chunks(cells[i].ratio);
      r.m = config.chunks;
      r.ratio = cells[i].ratio;
      r.snr_db = cells[i].snr_db;
      r.seed = config.seed;
      r.image = -1;
      r.user = -1;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.sigma_r = r.mse = r.psnr_db = r.ssim = r.frechet = r.ber = nan;
      r.baseline_mse = r.baseline_psnr_db = r.baseline_ssim = nan;
      r.x0_formula = name(config.x0_formula);
      r.lambda_rule = name(config.lambda_rule);
      r.status = "error: " + errors[i];
      result.records.push_back(r);
      csv << csv_row(r) << '\n';
      continue;
    }
    for (const auto& r : outputs[i].records) {
      result.records.push_back(r);
      csv << csv_row(r) << '\n';
    }
  }
  result.csv = csv.str();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "results.csv";
    const auto tmp = std::filesystem::path(out_dir) / "results.csv.tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
      os << result.csv;
    }
    std::filesystem::rename(tmp, path);
    if (config.triptychs) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i].empty() || outputs[i].records.empty()) continue;
        const auto& o = outputs[i];
        const auto trip = datasets::hconcat({o.originals[0], o.received[0], o.regenerated[0]});
        std::ostringstream fn;
        fn << "cell_r" << cells[i].ratio_index << "_s" << cells[i].snr_index << ".pgm";
        datasets::save_pgm(trip, (std::filesystem::path(out_dir) / fn.str()).string());
      }
    }
  }
  return result;
}

diffusion::Checkpoint train_model(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const auto data = datasets::generate({config.image_shape(), config.train_images, config.train_seed});
  const auto schedule = diffusion::linear_schedule(config.steps, config.beta_start, config.beta_end);
  const diffusion::DenoiserArch arch{config.image_shape().size(), config.hidden, config.time_embed};
  diffusion::TrainConfig tc;
  tc.steps = config.train_steps;
  tc.batch_size = config.batch_size;
  tc.learning_rate = config.learning_rate;
  tc.ema_decay = config.ema_decay;
  tc.seed = config.seed;
  const int report = std::max(1, config.train_steps / 10);
  auto state = diffusion::train(data, schedule, arch, tc, [&](const diffusion::TrainState& s) {
    if (log && (s.step % report == 0 || s.step == 1))
      *log << "step " << s.step << " running_loss " << s.running_loss << '\n';
  });
  diffusion::Checkpoint ckpt;
  ckpt.model = std::move(state.model);
  ckpt.shape = config.image_shape();
  ckpt.steps = config.steps;
  ckpt.beta_start = config.beta_start;
  ckpt.beta_end = config.beta_end;
  ckpt.seed = config.seed;
  return ckpt;
}

}  // namespace nsgc::harness
