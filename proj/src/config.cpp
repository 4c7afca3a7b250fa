#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nsgc/errors.hpp"
#include "nsgc/harness.hpp"

namespace nsgc::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string s = trim(unquote(trim(v)));
  if (s == "inf" || s == "+inf" || s == "Inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw FormatError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (!std::isfinite(d) || d != std::floor(d)) throw FormatError("config: '" + key + "' expects an integer");
  return static_cast<long long>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string s = unquote(trim(v));
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw FormatError("config: '" + key + "' expects true or false");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::string s = trim(v);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw FormatError("config: '" + key + "' expects [a, b, ...]");
  s = s.substr(1, s.size() - 2);
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (trim(tok).empty()) continue;
    out.push_back(parse_double(key, tok));
  }
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

}  // namespace

Index ExperimentConfig::transmitted_chunks(double ratio) const {
  return static_cast<Index>(std::llround(ratio * static_cast<double>(chunks)));
}

void ExperimentConfig::validate() const {
  require(users >= 1, "config: K must be >= 1");
  require(chunks >= 1, "config: M must be >= 1");
  for (double r : ratios) require(r > 0.0 && r <= 1.0, "config: every N/M ratio must lie in (0, 1]");
  for (double s : snrs_db) require(!std::isnan(s) && s != -std::numeric_limits<double>::infinity(),
                                   "config: SNRs must be finite or +inf");
  require(steps >= 1, "config: T must be >= 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, "config: need 0 < beta_start <= beta_end < 1");
  require(image_size >= 8, "config: image_size must be >= 8");
  require(test_images >= 1 && train_images >= 1, "config: image counts must be >= 1");
  require(batch_size >= 1 && train_steps >= 0, "config: bad training budget");
  require(hidden >= 1 && time_embed >= 0 && time_embed % 2 == 0, "config: bad denoiser architecture");
  require(!sigma_r || *sigma_r >= 0.0, "config: sigma_r must be >= 0");
  require(calibration_images >= 1, "config: calibration_images must be >= 1");
  require(workers >= 1, "config: workers must be >= 1");
  // Throws when the chunk layout does not tile the image.
  if (chunk_mapping == ofdma::ChunkMapping::Mode::patch_grid)
    (void)ofdma::ChunkMapping::square_patches(image_shape(), chunks);
  else
    (void)ofdma::ChunkMapping::contiguous(image_shape(), chunks);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"K", [&](auto& k, auto& v) { c.users = static_cast<int>(parse_int(k, v)); }},
      {"M", [&](auto& k, auto& v) { c.chunks = parse_int(k, v); }},
      {"ratios", [&](auto& k, auto& v) { c.ratios = parse_list(k, v); }},
      {"snrs_db", [&](auto& k, auto& v) { c.snrs_db = parse_list(k, v); }},
      {"T", [&](auto& k, auto& v) { c.steps = static_cast<int>(parse_int(k, v)); }},
      {"beta_start", [&](auto& k, auto& v) { c.beta_start = parse_double(k, v); }},
      {"beta_end", [&](auto& k, auto& v) { c.beta_end = parse_double(k, v); }},
      {"checkpoint", [&](auto&, auto& v) { c.checkpoint = unquote(trim(v)); }},
      {"image_size", [&](auto& k, auto& v) { c.image_size = static_cast<int>(parse_int(k, v)); }},
      {"test_images", [&](auto& k, auto& v) { c.test_images = static_cast<int>(parse_int(k, v)); }},
      {"test_seed", [&](auto& k, auto& v) { c.test_seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"train_images", [&](auto& k, auto& v) { c.train_images = static_cast<int>(parse_int(k, v)); }},
      {"train_seed", [&](auto& k, auto& v) { c.train_seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"train_steps", [&](auto& k, auto& v) { c.train_steps = static_cast<int>(parse_int(k, v)); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = static_cast<int>(parse_int(k, v)); }},
      {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = parse_double(k, v); }},
      {"hidden", [&](auto& k, auto& v) { c.hidden = parse_int(k, v); }},
      {"time_embed", [&](auto& k, auto& v) { c.time_embed = parse_int(k, v); }},
      {"ema_decay", [&](auto& k, auto& v) { c.ema_decay = parse_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"x0_formula",
       [&](auto& k, auto& v) {
         const auto s = unquote(trim(v));
         if (s == "corrected") c.x0_formula = diffusion::X0Formula::corrected;
         else if (s == "literal") c.x0_formula = diffusion::X0Formula::literal;
         else throw FormatError("config: '" + k + "' expects corrected or literal");
       }},
      {"lambda_rule",
       [&](auto& k, auto& v) {
         const auto s = unquote(trim(v));
         if (s == "saturating") c.lambda_rule = nullspace::LambdaRule::saturating;
         else if (s == "literal") c.lambda_rule = nullspace::LambdaRule::literal;
         else throw FormatError("config: '" + k + "' expects saturating or literal");
       }},
      {"clip_x0", [&](auto& k, auto& v) { c.clip_x0 = parse_bool(k, v); }},
      {"sigma_r",
       [&](auto& k, auto& v) {
         const auto s = unquote(trim(v));
         if (s.empty() || s == "none") c.sigma_r.reset();
         else c.sigma_r = parse_double(k, s);
       }},
      {"sigma_r_formula", [&](auto& k, auto& v) { c.sigma_r_formula = parse_bool(k, v); }},
      {"calibration_images", [&](auto& k, auto& v) { c.calibration_images = static_cast<int>(parse_int(k, v)); }},
      {"chunk_mapping",
       [&](auto& k, auto& v) {
         const auto s = unquote(trim(v));
         if (s == "patch_grid") c.chunk_mapping = ofdma::ChunkMapping::Mode::patch_grid;
         else if (s == "contiguous") c.chunk_mapping = ofdma::ChunkMapping::Mode::contiguous;
         else throw FormatError("config: '" + k + "' expects patch_grid or contiguous");
       }},
      {"workers", [&](auto& k, auto& v) { c.workers = static_cast<int>(parse_int(k, v)); }},
      {"triptychs", [&](auto& k, auto& v) { c.triptychs = parse_bool(k, v); }},
  };

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // '#' inside a quoted string is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // blank, comment, or TOML table header
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "K = " << c.users << "\n"
     << "M = " << c.chunks << "\n"
     << "ratios = " << fmt_list(c.ratios) << "\n"
     << "snrs_db = " << fmt_list(c.snrs_db) << "\n"
     << "T = " << c.steps << "\n"
     << "beta_start = " << fmt(c.beta_start) << "\n"
     << "beta_end = " << fmt(c.beta_end) << "\n"
     << "checkpoint = \"" << c.checkpoint << "\"\n"
     << "image_size = " << c.image_size << "\n"
     << "test_images = " << c.test_images << "\n"
     << "test_seed = " << c.test_seed << "\n"
     << "train_images = " << c.train_images << "\n"
     << "train_seed = " << c.train_seed << "\n"
     << "train_steps = " << c.train_steps << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "learning_rate = " << fmt(c.learning_rate) << "\n"
     << "hidden = " << c.hidden << "\n"
     << "time_embed = " << c.time_embed << "\n"
     << "ema_decay = " << fmt(c.ema_decay) << "\n"
     << "seed = " << c.seed << "\n"
     << "x0_formula = " << (c.x0_formula == diffusion::X0Formula::corrected ? "corrected" : "literal") << "\n"
     << "lambda_rule = " << (c.lambda_rule == nullspace::LambdaRule::saturating ? "saturating" : "literal") << "\n"
     << "clip_x0 = " << (c.clip_x0 ? "true" : "false") << "\n"
     << "sigma_r = " << (c.sigma_r ? fmt(*c.sigma_r) : std::string("none")) << "\n"
     << "sigma_r_formula = " << (c.sigma_r_formula ? "true" : "false") << "\n"
     << "calibration_images = " << c.calibration_images << "\n"
     << "chunk_mapping = " << (c.chunk_mapping == ofdma::ChunkMapping::Mode::patch_grid ? "patch_grid" : "contiguous")
     << "\n"
     << "workers = " << c.workers << "\n"
     << "triptychs = " << (c.triptychs ? "true" : "false") << "\n";
  return os.str();
}

std::vector<Cell> grid_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < config.ratios.size(); ++r)
    for (std::size_t s = 0; s < config.snrs_db.size(); ++s)
      cells.push_back({config.ratios[r], config.snrs_db[s], static_cast<int>(r), static_cast<int>(s)});
  return cells;
}

}  // namespace nsgc::harness
