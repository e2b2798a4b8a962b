#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "imdp/errors.hpp"
#include "imdp/rng.hpp"

namespace imdp::rl {

/// Fixed-capacity binary tree keeping prefix sums and the minimum of its
/// leaves; leaves beyond the filled size hold sum 0 and min +inf.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return sum_[base_ + leaf]; }
  double total() const { return sum_[1]; }
  double min() const { return min_[1]; }
  /// Leaf whose prefix-sum interval contains `mass` (0 <= mass < total).
  std::size_t find(double mass) const;

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> sum_;
  std::vector<double> min_;
};

struct SampleBatch {
  std::vector<std::size_t> ids;
  std::vector<double> weights;
};

/// Proportional prioritized replay: P(i) = p_i^alpha / sum_k p_k^alpha and
/// importance weights (N P(i))^-beta divided by the largest weight in the buffer.
template <class T>
class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(std::size_t capacity, double alpha = 0.6) : tree_(capacity), alpha_(alpha) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(capacity);
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return tree_.capacity(); }
  const T& at(std::size_t id) const { return items_.at(id); }
  double priority(std::size_t id) const { return std::pow(tree_.get(id), 1.0 / alpha_); }

  /// Inserts with the largest priority seen so far (1 for the first entry),
  /// overwriting the oldest entry once full. Returns the slot id.
  std::size_t insert(T item) { return insert(std::move(item), max_priority_); }

  std::size_t insert(T item, double priority) {
    if (!(priority > 0.0)) throw std::invalid_argument("replay priority must be positive");
    std::size_t id;
    if (items_.size() < capacity()) {
      id = items_.size();
      items_.push_back(std::move(item));
    } else {
      id = next_;
      items_[id] = std::move(item);
    }
    next_ = (id + 1) % capacity();
    set_priority(id, priority);
    return id;
  }

  /// Stratified proportional sampling of `n` ids with normalised weights.
  SampleBatch sample(std::size_t n, double beta, Rng& rng) const {
    if (items_.empty()) throw EmptyBuffer("cannot sample from an empty replay buffer");
    SampleBatch out;
    const double total = tree_.total();
    const double segment = total / static_cast<double>(n);
    const double count = static_cast<double>(items_.size());
    const double max_weight = std::pow(count * (tree_.min() / total), -beta);
    for (std::size_t k = 0; k < n; ++k) {
      const double mass = std::min((static_cast<double>(k) + rng.uniform()) * segment, std::nextafter(total, 0.0));
      const std::size_t id = tree_.find(mass);
      const double p = tree_.get(id) / total;
      out.ids.push_back(id);
      out.weights.push_back(std::min(1.0, std::pow(count * p, -beta) / max_weight));
    }
    return out;
  }

  void update(const std::vector<std::size_t>& ids, const std::vector<double>& priorities) {
    if (ids.size() != priorities.size()) throw std::invalid_argument("ids and priorities differ in length");
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] >= items_.size()) throw std::out_of_range("replay id out of range");
      if (!(priorities[k] > 0.0)) throw std::invalid_argument("replay priority must be positive");
      set_priority(ids[k], priorities[k]);
    }
  }

 private:
  void set_priority(std::size_t id, double priority) {
    max_priority_ = std::max(max_priority_, priority);
    tree_.set(id, std::pow(priority, alpha_));
  }

  SumTree tree_;
  double alpha_;
  std::vector<T> items_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
};

}  // namespace imdp::rl
