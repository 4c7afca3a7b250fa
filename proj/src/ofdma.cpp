#include "nsgc/ofdma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nsgc::ofdma {

bool AllocationPlan::disjoint() const {
  std::vector<char> used(static_cast<std::size_t>(subcarriers), 0);
  for (const auto& user : per_user) {
    for (Index l : user) {
      if (l < 0 || l >= subcarriers || used[static_cast<std::size_t>(l)]) return false;
      used[static_cast<std::size_t>(l)] = 1;
    }
  }
  return true;
}

AllocationPlan allocate(std::span<const Channel> channels, Index per_user_count) {
  const auto users = static_cast<Index>(channels.size());
  require(users >= 1, "allocate: need at least one user");
  require(per_user_count >= 0, "allocate: negative subcarrier count");
  const Index subcarriers = channels.front().size();
  for (const auto& c : channels) {
    require(c.size() == subcarriers, "allocate: channels must share the subcarrier count");
    require(c.gains.all_finite(), "allocate: channel gains must be finite");
  }
  if (users * per_user_count > subcarriers)
    throw InfeasiblePlanError("allocate: K*N = " + std::to_string(users * per_user_count) + " exceeds L = " +
                              std::to_string(subcarriers));

  AllocationPlan plan{users, subcarriers, per_user_count, std::vector<std::vector<Index>>(static_cast<std::size_t>(users))};
  std::vector<char> claimed(static_cast<std::size_t>(subcarriers), 0);
  for (Index round = 0; round < per_user_count; ++round) {
    for (Index i = 0; i < users; ++i) {
      const Index k = (round + i) % users;
      const auto& ch = channels[static_cast<std::size_t>(k)];
      Index best = -1;
      double best_mag = -1.0;
      for (Index l = 0; l < subcarriers; ++l) {
        if (claimed[static_cast<std::size_t>(l)]) continue;
        const double mag = ch.magnitude(l);
        if (mag > best_mag) {
          best_mag = mag;
          best = l;
        }
      }
      claimed[static_cast<std::size_t>(best)] = 1;
      plan.per_user[static_cast<std::size_t>(k)].push_back(best);
    }
  }
  return plan;
}

std::string to_text(const AllocationPlan& plan) {
  std::ostringstream os;
  for (const auto& user : plan.per_user) {
    for (std::size_t j = 0; j < user.size(); ++j) os << (j ? "," : "") << user[j];
    os << '\n';
  }
  return os.str();
}

AllocationPlan plan_from_text(const std::string& text, Index subcarriers) {
  AllocationPlan plan;
  plan.subcarriers = subcarriers;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<Index> user;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      if (tok.empty()) continue;
      try {
        user.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw FormatError("plan: bad subcarrier index '" + tok + "'");
      }
    }
    plan.per_user.push_back(std::move(user));
  }
  plan.users = static_cast<Index>(plan.per_user.size());
  plan.per_user_count = plan.per_user.empty() ? 0 : static_cast<Index>(plan.per_user.front().size());
  for (const auto& u : plan.per_user)
    if (static_cast<Index>(u.size()) != plan.per_user_count) throw FormatError("plan: ragged user lists");
  if (!plan.disjoint()) throw FormatError("plan: overlapping or out-of-range subcarriers");
  return plan;
}

Channel rayleigh_channel(Index subcarriers, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  Channel c{CVec::zeros(subcarriers)};
  for (Index l = 0; l < subcarriers; ++l) {
    c.gains.re[l] = nd(rng);
    c.gains.im[l] = nd(rng);
  }
  return c;
}

CVec compose_downlink(const AllocationPlan& plan, const std::vector<std::vector<Index>>& chunk_slots,
                      std::span<const CVec> signals) {
  require(static_cast<Index>(signals.size()) == plan.users && static_cast<Index>(chunk_slots.size()) == plan.users,
          "compose_downlink: one signal and one chunk list per user");
  auto y = CVec::zeros(plan.subcarriers);
  for (Index k = 0; k < plan.users; ++k) {
    const auto& subs = plan.per_user[static_cast<std::size_t>(k)];
    const auto& slots = chunk_slots[static_cast<std::size_t>(k)];
    const auto& x = signals[static_cast<std::size_t>(k)];
    require(slots.size() == subs.size(), "compose_downlink: chunk list length must equal N");
    require(x.size() >= plan.per_user_count, "compose_downlink: signal shorter than N");
    for (std::size_t j = 0; j < subs.size(); ++j) {
      require(slots[j] >= 0 && slots[j] < x.size(), "compose_downlink: chunk index out of range");
      y.re[subs[j]] = x.re[slots[j]];
      y.im[subs[j]] = x.im[slots[j]];
    }
  }
  return y;
}

CVec receive(const CVec& y, const Channel& channel, double sigma_n, Rng& rng) {
  require(sigma_n >= 0.0, "receive: sigma_n must be non-negative");
  require(channel.size() == y.size(), "receive: channel length must equal L");
  const auto& g = channel.gains;
  CVec r{(g.re.array() * y.re.array() - g.im.array() * y.im.array()).matrix(),
         (g.re.array() * y.im.array() + g.im.array() * y.re.array()).matrix()};
  if (sigma_n > 0.0) {
    std::normal_distribution<double> nd(0.0, sigma_n / std::sqrt(2.0));
    for (Index l = 0; l < r.size(); ++l) {
      r.re[l] += nd(rng);
      r.im[l] += nd(rng);
    }
  }
  return r;
}

Channel power_control(const Channel& channel, std::span<const Index> assigned) {
  Channel out = channel;
  for (Index l : assigned) {
    require(l >= 0 && l < channel.size(), "power_control: subcarrier out of range");
    if (channel.gains.re[l] == 0.0 && channel.gains.im[l] == 0.0)
      throw SingularOperatorError("power_control: zero gain on assigned subcarrier " + std::to_string(l));
    out.gains.re[l] = 1.0;
    out.gains.im[l] = 0.0;
  }
  return out;
}

Op build_operator(const AllocationPlan& plan, Index user, const Channel& channel, std::span<const Index> chunk_slots,
                  Index signal_length) {
  require(user >= 0 && user < plan.users, "build_operator: user out of range");
  require(channel.size() == plan.subcarriers, "build_operator: channel length must equal L");
  const auto& subs = plan.per_user[static_cast<std::size_t>(user)];
  require(chunk_slots.size() == subs.size(), "build_operator: chunk list length must equal N");
  const auto n = static_cast<Index>(subs.size());
  auto gains = CVec::zeros(n);
  for (Index i = 0; i < n; ++i) {
    gains.re[i] = channel.gains.re[subs[static_cast<std::size_t>(i)]];
    gains.im[i] = channel.gains.im[subs[static_cast<std::size_t>(i)]];
  }
  return Op(plan.subcarriers, signal_length, subs, std::vector<Index>(chunk_slots.begin(), chunk_slots.end()),
            std::move(gains));
}

Eigen::VectorXd assemble_estimate(const Op& op, const CVec& r, const Eigen::VectorXd& x_tilde) {
  require(x_tilde.size() == op.cols(), "assemble_estimate: generated signal length must equal M");
  return pinv_apply(op, r).re + null_project(op, x_tilde);
}

RealSignal assemble_estimate(const Op& op, const CVec& r, const RealSignal& x_tilde) {
  return RealSignal(assemble_estimate(op, r, x_tilde.values), x_tilde.shape);
}

ChunkMapping ChunkMapping::contiguous(ImageShape shape, Index chunks) {
  require(chunks >= 1 && shape.size() % chunks == 0, "ChunkMapping: signal length must be a multiple of M");
  ChunkMapping m;
  m.mode_ = Mode::contiguous;
  m.shape_ = shape;
  const Index per = shape.size() / chunks;
  m.groups_.resize(static_cast<std::size_t>(chunks));
  for (Index j = 0; j < chunks; ++j) {
    auto& g = m.groups_[static_cast<std::size_t>(j)];
    g.resize(static_cast<std::size_t>(per));
    std::iota(g.begin(), g.end(), j * per);
  }
  return m;
}

ChunkMapping ChunkMapping::patch_grid(ImageShape shape, Index grid_rows, Index grid_cols) {
  require(grid_rows >= 1 && grid_cols >= 1 && shape.height % grid_rows == 0 && shape.width % grid_cols == 0,
          "ChunkMapping: image must tile evenly into the patch grid");
  ChunkMapping m;
  m.mode_ = Mode::patch_grid;
  m.shape_ = shape;
  m.grid_rows_ = grid_rows;
  m.grid_cols_ = grid_cols;
  const Index ph = shape.height / grid_rows;
  const Index pw = shape.width / grid_cols;
  m.groups_.resize(static_cast<std::size_t>(grid_rows * grid_cols));
  for (Index gr = 0; gr < grid_rows; ++gr) {
    for (Index gc = 0; gc < grid_cols; ++gc) {
      auto& g = m.groups_[static_cast<std::size_t>(gr * grid_cols + gc)];
      for (Index r = gr * ph; r < (gr + 1) * ph; ++r)
        for (Index c = gc * pw; c < (gc + 1) * pw; ++c)
          for (Index ch = 0; ch < shape.channels; ++ch) g.push_back((r * shape.width + c) * shape.channels + ch);
    }
  }
  return m;
}

ChunkMapping ChunkMapping::square_patches(ImageShape shape, Index chunks) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(chunks))));
  require(side * side == chunks, "ChunkMapping: square patch grid needs M to be a perfect square");
  return patch_grid(shape, side, side);
}

bool ChunkMapping::is_bijective() const {
  std::vector<int> hits(static_cast<std::size_t>(shape_.size()), 0);
  for (const auto& g : groups_) {
    for (Index p : g) {
      if (p < 0 || p >= shape_.size()) return false;
      ++hits[static_cast<std::size_t>(p)];
    }
  }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

Eigen::VectorXd pixel_mask(std::span<const Index> transmitted_chunks, const ChunkMapping& mapping) {
  require(mapping.is_bijective(), "pixel_mask: chunk mapping is not a bijection onto the image");
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(mapping.shape().size());
  for (Index j : transmitted_chunks) {
    require(j >= 0 && j < mapping.chunks(), "pixel_mask: chunk index out of range");
    for (Index p : mapping.pixels(j)) mask[p] = 1.0;
  }
  return mask;
}

Eigen::VectorXd pixel_mask(const Op& op, const ChunkMapping& mapping) {
  require(op.cols() == mapping.chunks(), "pixel_mask: operator M must equal mapping chunk count");
  return pixel_mask(std::span<const Index>(op.slot_of()), mapping);
}

}  // namespace nsgc::ofdma
