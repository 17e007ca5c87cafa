#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bfmadapt/rng.hpp"

namespace bfma {

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;  // reward of the state entered
  int s_next = 0;
};

// Fixed-capacity ring with FIFO eviction and seeded uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, uint64_t seed) : capacity_(capacity), rs_(seed) {
    if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
  }

  void push(const Transition& t) {
    if (static_cast<int>(data_.size()) < capacity_) {
      data_.push_back(t);
    } else {
      data_[head_] = t;
      head_ = (head_ + 1) % capacity_;
    }
  }

  int size() const { return static_cast<int>(data_.size()); }

  const Transition& sample() {
    if (data_.empty()) throw std::logic_error("ReplayBuffer: sample from empty buffer");
    return data_[rs_.uniform_int(static_cast<int>(data_.size()))];
  }

  std::vector<Transition> sample_batch(int n) {
    std::vector<Transition> batch(n);
    for (int i = 0; i < n; ++i) batch[i] = sample();
    return batch;
  }

  // Oldest-first is not guaranteed; this is for inspection in tests.
  const std::vector<Transition>& contents() const { return data_; }

 private:
  int capacity_;
  int head_ = 0;  // next eviction slot once full
  std::vector<Transition> data_;
  RandomStream rs_;
};

}  // namespace bfma
