#include "imdp/replay.hpp"

#include <algorithm>

namespace imdp::rl {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  while (base_ < capacity_) base_ <<= 1;
  sum_.assign(2 * base_, 0.0);
  min_.assign(2 * base_, std::numeric_limits<double>::infinity());
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= capacity_) throw std::out_of_range("sum tree leaf out of range");
  std::size_t i = base_ + leaf;
  sum_[i] = value;
  min_[i] = value;
  for (i /= 2; i >= 1; i /= 2) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    min_[i] = std::min(min_[2 * i], min_[2 * i + 1]);
  }
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < base_) {
    const double left = sum_[2 * i];
    if (mass < left || sum_[2 * i + 1] == 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return std::min(i - base_, capacity_ - 1);
}

}  // namespace imdp::rl
