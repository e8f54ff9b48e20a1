#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynsel/core.hpp"
#include "dynsel/error.hpp"
#include "dynsel/pool.hpp"

namespace dynsel {

struct Neighbor {
  Instance instance;
  double distance = 0.0;
  /// Position in the validation set's flat view at query time.
  std::size_t position = 0;
};

/// Region of competence: neighbors sorted by ascending distance, ties by insertion order.
struct Neighborhood {
  std::vector<double> query;
  std::vector<Neighbor> neighbors;

  std::size_t size() const { return neighbors.size(); }
  bool empty() const { return neighbors.empty(); }
  const Neighbor& operator[](std::size_t i) const { return neighbors[i]; }
};

/// Concatenated predict_proba outputs of every pool member.
using OutputProfile = std::vector<double>;

inline OutputProfile output_profile(const Pool& pool, std::span<const double> x) {
  OutputProfile profile;
  for (const auto& m : pool.members()) {
    auto p = m.learner->predict_proba(x);
    profile.insert(profile.end(), p.begin(), p.end());
  }
  return profile;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance between vectors of different dimension");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Sliding window of the last W full chunks, with a flat view over all
/// retained instances ordered oldest first.
class ValidationSet {
 public:
  static constexpr std::size_t kDefaultWindow = 4;

  explicit ValidationSet(std::size_t window_chunks = kDefaultWindow) : window_(window_chunks) {
    if (window_chunks == 0) throw ConfigError("validation window must hold at least one chunk");
  }

  void push_chunk(Chunk chunk) {
    if (!chunk.full()) throw std::invalid_argument("validation set accepts only full chunks");
    chunks_.push_back(std::move(chunk));
    if (chunks_.size() > window_) chunks_.pop_front();
    flat_.clear();
    for (const auto& c : chunks_) flat_.insert(flat_.end(), c.begin(), c.end());
  }

  std::size_t window() const { return window_; }
  std::size_t size() const { return flat_.size(); }
  bool empty() const { return flat_.empty(); }
  const std::deque<Chunk>& chunks() const { return chunks_; }
  std::span<const Instance> instances() const { return flat_; }
  const Instance& operator[](std::size_t i) const { return flat_[i]; }

 private:
  std::size_t window_;
  std::deque<Chunk> chunks_;
  std::vector<Instance> flat_;
};

namespace detail {

/// k smallest of `sq_dist` (ascending, ties by position) as a neighborhood.
inline Neighborhood k_smallest(const ValidationSet& vs, std::span<const double> query, std::vector<double> sq_dist,
                               std::size_t k) {
  std::vector<std::pair<double, std::size_t>> order(sq_dist.size());
  for (std::size_t i = 0; i < sq_dist.size(); ++i) order[i] = {sq_dist[i], i};
  const std::size_t kk = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end());
  Neighborhood nh;
  nh.query.assign(query.begin(), query.end());
  nh.neighbors.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i)
    nh.neighbors.push_back(Neighbor{vs[order[i].second], std::sqrt(order[i].first), order[i].second});
  return nh;
}

}  // namespace detail

/// Exact Euclidean k-NN by exhaustive scan.
inline Neighborhood knn_query(const ValidationSet& vs, std::span<const double> x, std::size_t k) {
  if (vs.empty()) throw NotReadyError();
  if (k == 0) throw std::invalid_argument("k must be positive");
  std::vector<double> d(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) d[i] = squared_distance(x, vs[i].features);
  return detail::k_smallest(vs, x, std::move(d), k);
}

/// Output profiles of every validation instance against `pool`, in flat-view order.
inline std::vector<OutputProfile> validation_profiles(const ValidationSet& vs, const Pool& pool) {
  std::vector<OutputProfile> out;
  out.reserve(vs.size());
  for (const auto& inst : vs.instances()) out.push_back(output_profile(pool, inst.features));
  return out;
}

/// k-NN in output-profile space using precomputed validation profiles
/// (which must come from `validation_profiles(vs, pool)` for the same pool).
inline Neighborhood knn_output_profiles(const ValidationSet& vs, const Pool& pool,
                                        std::span<const OutputProfile> profiles, std::span<const double> x,
                                        std::size_t k) {
  if (vs.empty() || pool.empty()) throw NotReadyError();
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (profiles.size() != vs.size()) throw std::invalid_argument("profile cache does not match the validation set");
  const auto query_profile = output_profile(pool, x);
  std::vector<double> d(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) d[i] = squared_distance(query_profile, profiles[i]);
  return detail::k_smallest(vs, x, std::move(d), k);
}

inline Neighborhood knn_output_profiles(const ValidationSet& vs, const Pool& pool, std::span<const double> x,
                                        std::size_t k) {
  if (vs.empty() || pool.empty()) throw NotReadyError();
  const auto profiles = validation_profiles(vs, pool);
  return knn_output_profiles(vs, pool, profiles, x, k);
}

}  // namespace dynsel
