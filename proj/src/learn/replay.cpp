#include "guide/learn/replay.hpp"

#include <algorithm>

#include "guide/core/error.hpp"

namespace guide {

ReplayBuffer::ReplayBuffer(int obs_dim, int act_dim, size_t capacity, int heads)
    : obs_dim_(obs_dim),
      act_dim_(act_dim),
      heads_(heads),
      capacity_(capacity),
      row_(static_cast<size_t>(2 * obs_dim + act_dim + 2 + heads)) {
  if (capacity == 0 || obs_dim <= 0 || act_dim <= 0 || heads < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid replay buffer shape");
  }
}

void ReplayBuffer::Add(std::span<const double> obs, std::span<const double> act, double rew,
                       std::span<const double> next_obs, bool done,
                       std::span<const double> mask) {
  if (obs.size() != static_cast<size_t>(obs_dim_) || next_obs.size() != obs.size() ||
      act.size() != static_cast<size_t>(act_dim_) ||
      mask.size() != static_cast<size_t>(heads_)) {
    throw Error(ErrorCode::kShapeMismatch, "transition does not match the buffer layout");
  }
  if (size_ < capacity_ && next_ == size_) {
    data_.resize(data_.size() + row_);
    ids_.push_back(0);
  }
  double* p = data_.data() + next_ * row_;
  p = std::copy(obs.begin(), obs.end(), p);
  p = std::copy(act.begin(), act.end(), p);
  *p++ = rew;
  p = std::copy(next_obs.begin(), next_obs.end(), p);
  *p++ = done ? 1.0 : 0.0;
  std::copy(mask.begin(), mask.end(), p);
  ids_[next_] = added_++;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::Gather(const std::vector<size_t>& slots) const {
  const Eigen::Index b = static_cast<Eigen::Index>(slots.size());
  Batch out;
  out.obs.resize(obs_dim_, b);
  out.act.resize(act_dim_, b);
  out.rew.resize(b);
  out.next_obs.resize(obs_dim_, b);
  out.done.resize(b);
  if (heads_ > 0) out.mask.resize(heads_, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double* p = data_.data() + slots[j] * row_;
    out.obs.col(j) = Eigen::Map<const Vector>(p, obs_dim_);
    p += obs_dim_;
    out.act.col(j) = Eigen::Map<const Vector>(p, act_dim_);
    p += act_dim_;
    out.rew[j] = *p++;
    out.next_obs.col(j) = Eigen::Map<const Vector>(p, obs_dim_);
    p += obs_dim_;
    out.done[j] = *p++;
    if (heads_ > 0) out.mask.col(j) = Eigen::Map<const Vector>(p, heads_);
    out.index.push_back(ids_[slots[j]]);
  }
  return out;
}

Batch ReplayBuffer::Sample(size_t batch, CounterRng& rng) const {
  if (size_ < batch || batch == 0) {
    throw Error(ErrorCode::kInvalidArgument, "not enough transitions to sample a batch");
  }
  std::vector<size_t> slots(batch);
  for (auto& s : slots) s = rng.Below(size_);
  return Gather(slots);
}

Batch ReplayBuffer::At(size_t i) const {
  if (i >= size_) throw Error(ErrorCode::kInvalidArgument, "replay index out of range");
  const size_t oldest = size_ < capacity_ ? 0 : next_;
  return Gather({(oldest + i) % capacity_});
}

}  // namespace guide
