#ifndef GUIDE_LEARN_REPLAY_HPP_
#define GUIDE_LEARN_REPLAY_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "guide/core/rng.hpp"
#include "guide/learn/nn.hpp"

namespace guide {

// Column-major minibatch: one transition per column.
struct Batch {
  Matrix obs;
  Matrix act;  // critic-space action [t; eta]
  Vector rew;
  Matrix next_obs;
  Vector done;
  Matrix mask;  // heads x B bootstrap inclusion; empty means all included
  std::vector<uint64_t> index;
  Eigen::Index size() const { return obs.cols(); }
};

// FIFO ring of transitions with uniform sampling. Storage grows on demand up
// to the capacity, then the oldest entry is overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer(int obs_dim, int act_dim, size_t capacity, int heads = 0);

  void Add(std::span<const double> obs, std::span<const double> act, double rew,
           std::span<const double> next_obs, bool done, std::span<const double> mask = {});
  Batch Sample(size_t batch, CounterRng& rng) const;
  // Transition at logical position i (0 = oldest retained).
  Batch At(size_t i) const;

  size_t size() const { return size_; }
  size_t capacity() const { return capacity_; }
  uint64_t total_added() const { return added_; }

 private:
  Batch Gather(const std::vector<size_t>& slots) const;

  int obs_dim_;
  int act_dim_;
  int heads_;
  size_t capacity_;
  size_t size_ = 0;
  size_t next_ = 0;
  uint64_t added_ = 0;
  size_t row_;
  std::vector<double> data_;
  std::vector<uint64_t> ids_;
};

}  // namespace guide

#endif  // GUIDE_LEARN_REPLAY_HPP_
