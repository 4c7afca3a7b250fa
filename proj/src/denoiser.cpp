#include "nsgc/denoiser.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "nsgc/errors.hpp"

namespace nsgc::diffusion {

namespace {

struct Views {
  Eigen::Map<const MatrixXd> w1;
  Eigen::Map<const VectorXd> b1;
  Eigen::Map<const MatrixXd> w2;
  Eigen::Map<const VectorXd> b2;
  Eigen::Map<const MatrixXd> w3;
  Eigen::Map<const VectorXd> b3;
};

template <typename Ptr>
auto layer_views(const DenoiserArch& a, Ptr p) {
  const Index in = a.dim + a.time_embed;
  const Index h = a.hidden;
  auto w1 = p;
  auto b1 = w1 + h * in;
  auto w2 = b1 + h;
  auto b2 = w2 + h * h;
  auto w3 = b2 + h;
  auto b3 = w3 + a.dim * h;
  return std::make_tuple(w1, b1, w2, b2, w3, b3);
}

Views views(const DenoiserArch& a, const double* p) {
  auto [w1, b1, w2, b2, w3, b3] = layer_views(a, p);
  const Index in = a.dim + a.time_embed;
  return {{w1, a.hidden, in}, {b1, a.hidden}, {w2, a.hidden, a.hidden},
          {b2, a.hidden},     {w3, a.dim, a.hidden}, {b3, a.dim}};
}

MatrixXd silu(const MatrixXd& a) { return (a.array() / (1.0 + (-a.array()).exp())).matrix(); }

MatrixXd silu_grad(const MatrixXd& a) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-a.array()).exp());
  return (s * (1.0 + a.array() * (1.0 - s))).matrix();
}

MatrixXd network_input(const DenoiserArch& arch, const MatrixXd& xt, std::span<const int> ts) {
  require(xt.rows() == arch.dim, "denoiser: input dimension mismatch");
  require(static_cast<Index>(ts.size()) == xt.cols(), "denoiser: one time step per column");
  MatrixXd z(arch.dim + arch.time_embed, xt.cols());
  z.topRows(arch.dim) = xt;
  for (Index b = 0; b < xt.cols(); ++b)
    z.col(b).tail(arch.time_embed) = time_embedding(ts[static_cast<std::size_t>(b)], arch.time_embed);
  return z;
}

void put_le(std::ostream& os, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double get_le(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint: truncated parameter block");
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = (u << 8) | bytes[i];
  return std::bit_cast<double>(u);
}

}  // namespace

VectorXd time_embedding(int t, Index size) {
  VectorXd e = VectorXd::Zero(size);
  const Index half = size / 2;
  for (Index i = 0; i < half; ++i) {
    const double w = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(t * w);
    e[half + i] = std::cos(t * w);
  }
  return e;
}

DenoiserModel::DenoiserModel(DenoiserArch arch, VectorXd params) : arch_(arch), params_(std::move(params)) {
  require(arch_.dim >= 1 && arch_.hidden >= 1 && arch_.time_embed >= 0, "DenoiserModel: bad architecture");
  require(params_.size() == arch_.param_count(), "DenoiserModel: parameter count does not match architecture");
}

DenoiserModel DenoiserModel::zeros(DenoiserArch arch) { return {arch, VectorXd::Zero(arch.param_count())}; }

DenoiserModel DenoiserModel::initialize(DenoiserArch arch, std::uint64_t seed) {
  DenoiserModel m = zeros(arch);
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto [w1, b1, w2, b2, w3, b3] = layer_views(arch, m.params_.data());
  const Index in = arch.dim + arch.time_embed;
  auto fill = [&](double* p, Index n, double scale) {
    for (Index i = 0; i < n; ++i) p[i] = scale * nd(rng);
  };
  fill(w1, arch.hidden * in, 1.0 / std::sqrt(static_cast<double>(in)));
  fill(w2, arch.hidden * arch.hidden, 1.0 / std::sqrt(static_cast<double>(arch.hidden)));
  fill(w3, arch.dim * arch.hidden, 0.1 / std::sqrt(static_cast<double>(arch.hidden)));
  (void)b1;
  (void)b2;
  (void)b3;
  return m;
}

MatrixXd DenoiserModel::forward(const MatrixXd& xt, std::span<const int> ts) const {
  const Views v = views(arch_, params_.data());
  const MatrixXd z = network_input(arch_, xt, ts);
  MatrixXd h1 = silu((v.w1 * z).colwise() + v.b1);
  MatrixXd h2 = silu((v.w2 * h1).colwise() + v.b2);
  return (v.w3 * h2).colwise() + v.b3;
}

VectorXd DenoiserModel::predict_noise(const VectorXd& xt, int t) const {
  const int ts[1] = {t};
  return forward(xt, ts).col(0);
}

double training_loss(const NoisePredictor& model, const VectorXd& x0, int t, const VectorXd& eps,
                     const NoiseSchedule& schedule) {
  require(x0.size() == eps.size(), "training_loss: noise shape must match signal");
  const VectorXd xt = forward_sample(x0, t, eps, schedule);
  return (eps - model.predict_noise(xt, t)).squaredNorm();
}

LossGradient loss_gradient(const DenoiserModel& model, const Batch& batch, const NoiseSchedule& schedule) {
  const auto& arch = model.arch();
  const Index n = batch.x0.cols();
  require(n >= 1, "loss_gradient: empty batch");
  require(batch.eps.rows() == batch.x0.rows() && batch.eps.cols() == n && static_cast<Index>(batch.t.size()) == n,
          "loss_gradient: batch shape mismatch");

  MatrixXd xt(batch.x0.rows(), n);
  for (Index b = 0; b < n; ++b) {
    const int t = batch.t[static_cast<std::size_t>(b)];
    schedule.check_step(t);
    const double ab = schedule.alpha_bar(t);
    xt.col(b) = std::sqrt(ab) * batch.x0.col(b) + std::sqrt(1.0 - ab) * batch.eps.col(b);
  }

  const Views v = views(arch, model.params().data());
  const MatrixXd z = network_input(arch, xt, batch.t);
  const MatrixXd a1 = (v.w1 * z).colwise() + v.b1;
  const MatrixXd h1 = silu(a1);
  const MatrixXd a2 = (v.w2 * h1).colwise() + v.b2;
  const MatrixXd h2 = silu(a2);
  const MatrixXd out = (v.w3 * h2).colwise() + v.b3;

  const MatrixXd resid = batch.eps - out;
  LossGradient result;
  result.loss = resid.squaredNorm() / static_cast<double>(n);

  result.gradient = VectorXd::Zero(arch.param_count());
  auto [gw1, gb1, gw2, gb2, gw3, gb3] = layer_views(arch, result.gradient.data());
  const Index in = arch.dim + arch.time_embed;

  const MatrixXd d_out = (-2.0 / static_cast<double>(n)) * resid;
  Eigen::Map<MatrixXd>(gw3, arch.dim, arch.hidden).noalias() = d_out * h2.transpose();
  Eigen::Map<VectorXd>(gb3, arch.dim) = d_out.rowwise().sum();

  const MatrixXd d_a2 = ((v.w3.transpose() * d_out).array() * silu_grad(a2).array()).matrix();
  Eigen::Map<MatrixXd>(gw2, arch.hidden, arch.hidden).noalias() = d_a2 * h1.transpose();
  Eigen::Map<VectorXd>(gb2, arch.hidden) = d_a2.rowwise().sum();

  const MatrixXd d_a1 = ((v.w2.transpose() * d_a2).array() * silu_grad(a1).array()).matrix();
  Eigen::Map<MatrixXd>(gw1, arch.hidden, in).noalias() = d_a1 * z.transpose();
  Eigen::Map<VectorXd>(gb1, arch.hidden) = d_a1.rowwise().sum();

  if (!std::isfinite(result.loss) || !result.gradient.allFinite())
    throw TrainingError("loss_gradient: non-finite loss or gradient");
  return result;
}

TrainState train(std::span<const RealSignal> dataset, const NoiseSchedule& schedule, const DenoiserArch& arch,
                 const TrainConfig& config, const TrainCallback& on_step) {
  require(!dataset.empty(), "train: empty dataset");
  require(config.batch_size >= 1 && config.steps >= 0, "train: bad batch size or step budget");
  for (const auto& s : dataset) require(s.size() == arch.dim, "train: sample dimension does not match architecture");

  TrainState st;
  st.model = DenoiserModel::initialize(arch, derive_seed(config.seed, {0}));
  st.first_moment = VectorXd::Zero(arch.param_count());
  st.second_moment = VectorXd::Zero(arch.param_count());
  if (config.ema_decay > 0.0) st.ema = st.model.params();

  Rng rng(derive_seed(config.seed, {1}));
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, schedule.steps());
  std::normal_distribution<double> nd(0.0, 1.0);

  Batch batch{MatrixXd(arch.dim, config.batch_size), std::vector<int>(static_cast<std::size_t>(config.batch_size)),
              MatrixXd(arch.dim, config.batch_size)};
  for (int step = 0; step < config.steps; ++step) {
    for (int b = 0; b < config.batch_size; ++b) {
      batch.x0.col(b) = dataset[pick(rng)].values;
      batch.t[static_cast<std::size_t>(b)] = pick_t(rng);
      for (Index i = 0; i < arch.dim; ++i) batch.eps(i, b) = nd(rng);
    }
    LossGradient lg;
    try {
      lg = loss_gradient(st.model, batch, schedule);
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " at step " + std::to_string(step));
    }

    ++st.step;
    if (st.step == 1) {
      st.initial_loss = lg.loss;
      st.running_loss = lg.loss;
    } else {
      st.running_loss = 0.98 * st.running_loss + 0.02 * lg.loss;
    }

    st.first_moment = config.beta1 * st.first_moment + (1.0 - config.beta1) * lg.gradient;
    st.second_moment = config.beta2 * st.second_moment + (1.0 - config.beta2) * lg.gradient.cwiseAbs2();
    if (config.learning_rate != 0.0) {
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(st.step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(st.step));
      st.model.params().array() -= config.learning_rate * (st.first_moment.array() / c1) /
                                   ((st.second_moment.array() / c2).sqrt() + config.epsilon);
    }
    if (config.ema_decay > 0.0) st.ema = config.ema_decay * st.ema + (1.0 - config.ema_decay) * st.model.params();
    if (on_step) on_step(st);
    if (config.target_loss > 0.0 && st.running_loss < config.target_loss) break;
  }
  if (config.ema_decay > 0.0) st.model.params() = st.ema;
  return st;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path);
    std::ostringstream hdr;
    hdr.precision(17);
    const auto& a = ckpt.model.arch();
    hdr << "nsgc-ddpm 1\n"
        << "dim " << a.dim << "\nhidden " << a.hidden << "\ntime_embed " << a.time_embed << "\n"
        << "height " << ckpt.shape.height << "\nwidth " << ckpt.shape.width << "\nchannels " << ckpt.shape.channels
        << "\n"
        << "T " << ckpt.steps << "\nbeta_start " << ckpt.beta_start << "\nbeta_end " << ckpt.beta_end << "\n"
        << "seed " << ckpt.seed << "\nparams " << ckpt.model.params().size() << "\nend\n";
    os << hdr.str();
    for (Index i = 0; i < ckpt.model.params().size(); ++i) put_le(os, ckpt.model.params()[i]);
    if (!os) throw std::runtime_error("short write on checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot rename checkpoint to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("missing checkpoint " + path);
  std::string line;
  if (!std::getline(is, line) || line != "nsgc-ddpm 1") throw FormatError("checkpoint: unknown header in " + path);
  Checkpoint c;
  DenoiserArch arch;
  Index count = -1;
  while (std::getline(is, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dim") ls >> arch.dim;
    else if (key == "hidden") ls >> arch.hidden;
    else if (key == "time_embed") ls >> arch.time_embed;
    else if (key == "height") ls >> c.shape.height;
    else if (key == "width") ls >> c.shape.width;
    else if (key == "channels") ls >> c.shape.channels;
    else if (key == "T") ls >> c.steps;
    else if (key == "beta_start") ls >> c.beta_start;
    else if (key == "beta_end") ls >> c.beta_end;
    else if (key == "seed") ls >> c.seed;
    else if (key == "params") ls >> count;
    else throw FormatError("checkpoint: unknown key '" + key + "'");
    if (ls.fail()) throw FormatError("checkpoint: bad value for '" + key + "'");
  }
  if (line != "end") throw FormatError("checkpoint: missing end of header");
  if (count != arch.param_count()) throw FormatError("checkpoint: parameter count does not match architecture");
  VectorXd params(count);
  for (Index i = 0; i < count; ++i) params[i] = get_le(is);
  c.model = DenoiserModel(arch, std::move(params));
  return c;
}

}  // namespace nsgc::diffusion
