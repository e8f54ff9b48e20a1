#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynsel/error.hpp"
#include "dynsel/learners.hpp"

namespace dynsel {

/// Ordered ensemble of learners tagged with the chunk they were born on.
/// Owners may exceed `max_size` by one transiently while deciding what to
/// prune; `within_bound()` must hold again once a fit step returns.
class Pool {
 public:
  struct Member {
    std::unique_ptr<Learner> learner;
    std::size_t birth_chunk = 0;
    double quality = 0.0;
  };

  explicit Pool(std::size_t max_size) : max_size_(max_size) {
    if (max_size == 0) throw ConfigError("pool size must be positive");
  }

  void add(std::unique_ptr<Learner> learner, std::size_t birth_chunk) {
    if (!members_.empty() && birth_chunk < members_.back().birth_chunk)
      throw std::invalid_argument("pool birth indices must be nondecreasing");
    members_.push_back(Member{std::move(learner), birth_chunk, 0.0});
  }

  void erase(std::size_t i) { members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(i)); }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t max_size() const { return max_size_; }
  bool within_bound() const { return members_.size() <= max_size_; }

  const Learner& operator[](std::size_t i) const { return *members_[i].learner; }
  Learner& learner(std::size_t i) { return *members_[i].learner; }
  const Member& member(std::size_t i) const { return members_[i]; }
  Member& member(std::size_t i) { return members_[i]; }
  std::span<const Member> members() const { return members_; }

  std::vector<ClassIndex> predictions(std::span<const double> x) const {
    std::vector<ClassIndex> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.learner->predict(x));
    return out;
  }

  /// Unweighted vote of every member.
  ClassIndex vote(std::span<const double> x, std::size_t classes) const { return majority_vote(predictions(x), classes); }

 private:
  std::size_t max_size_;
  std::vector<Member> members_;
};

}  // namespace dynsel
