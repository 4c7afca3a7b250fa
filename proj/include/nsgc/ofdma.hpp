#pragma once

// Multi-user OFDMA downlink: orthogonal subcarrier allocation, composition of the
// transmitted block, per-user reception and the range/null estimate assembly.

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "nsgc/linop.hpp"
#include "nsgc/rng.hpp"
#include "nsgc/signal.hpp"

namespace nsgc::ofdma {

using CVec = ComplexVector<double>;
using Channel = DiagonalChannel<double>;
using Op = MaskedChannelOp<double>;

struct AllocationPlan {
  Index users = 0;
  Index subcarriers = 0;
  Index per_user_count = 0;
  std::vector<std::vector<Index>> per_user;

  bool disjoint() const;
  bool saturated() const { return subcarriers == users * per_user_count; }
};

/// Greedy multi-user-diversity allocation. In round r every user, in order
/// (r + i) mod K, claims its strongest unclaimed subcarrier; ties go to the lower index.
AllocationPlan allocate(std::span<const Channel> channels, Index per_user_count);

/// One line per user, comma-separated subcarrier indices.
std::string to_text(const AllocationPlan& plan);
AllocationPlan plan_from_text(const std::string& text, Index subcarriers);

/// Rayleigh block-fading gains: independent CN(0, 1) per subcarrier.
Channel rayleigh_channel(Index subcarriers, Rng& rng);

/// y = sum_k B_k x_k. Chunk chunk_slots[k][j] of user k rides subcarrier plan.per_user[k][j].
CVec compose_downlink(const AllocationPlan& plan, const std::vector<std::vector<Index>>& chunk_slots,
                      std::span<const CVec> signals);

/// r = diag(gains) y + n with circular Gaussian n of total variance sigma_n^2 per entry.
CVec receive(const CVec& y, const Channel& channel, double sigma_n, Rng& rng);

/// Effective channel after transmit-side inversion: unit gain on every assigned subcarrier.
Channel power_control(const Channel& channel, std::span<const Index> assigned);

/// A_k = H_k B_k for one user of the plan.
Op build_operator(const AllocationPlan& plan, Index user, const Channel& channel,
                  std::span<const Index> chunk_slots, Index signal_length);

/// x_hat = A^dagger r + (I - A^dagger A) x_tilde, real part.
Eigen::VectorXd assemble_estimate(const Op& op, const CVec& r, const Eigen::VectorXd& x_tilde);
RealSignal assemble_estimate(const Op& op, const CVec& r, const RealSignal& x_tilde);

/// Bijection between M signal chunks and disjoint pixel groups of an image.
class ChunkMapping {
 public:
  enum class Mode { contiguous, patch_grid };

  static ChunkMapping contiguous(ImageShape shape, Index chunks);
  static ChunkMapping patch_grid(ImageShape shape, Index grid_rows, Index grid_cols);
  /// Square grid of sqrt(chunks) x sqrt(chunks) patches.
  static ChunkMapping square_patches(ImageShape shape, Index chunks);

  Mode mode() const { return mode_; }
  const ImageShape& shape() const { return shape_; }
  Index chunks() const { return static_cast<Index>(groups_.size()); }
  Index grid_rows() const { return grid_rows_; }
  Index grid_cols() const { return grid_cols_; }
  Index pixels_per_chunk() const { return groups_.empty() ? 0 : static_cast<Index>(groups_.front().size()); }
  const std::vector<Index>& pixels(Index chunk) const { return groups_[static_cast<std::size_t>(chunk)]; }

  /// Every pixel in exactly one chunk.
  bool is_bijective() const;

 private:
  Mode mode_ = Mode::contiguous;
  ImageShape shape_;
  Index grid_rows_ = 0;
  Index grid_cols_ = 0;
  std::vector<std::vector<Index>> groups_;
};

/// 1 on pixels of transmitted chunks, 0 on lost ones.
Eigen::VectorXd pixel_mask(std::span<const Index> transmitted_chunks, const ChunkMapping& mapping);
Eigen::VectorXd pixel_mask(const Op& op, const ChunkMapping& mapping);

}  // namespace nsgc::ofdma
