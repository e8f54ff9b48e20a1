#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynsel/core.hpp"
#include "dynsel/error.hpp"

namespace dynsel {

/// Index of the largest value; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Most-voted class; ties resolve to the lowest class index.
inline ClassIndex majority_vote(std::span<const ClassIndex> votes, std::size_t classes) {
  std::vector<double> tally(classes, 0.0);
  for (auto v : votes) tally[v] += 1.0;
  return argmax(tally);
}

inline std::vector<double> uniform_proba(std::size_t classes) {
  return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
}

/// Scales a nonnegative vector to unit sum; an all-zero vector becomes uniform.
inline void normalize(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0.0)) {
    v = uniform_proba(v.size());
    return;
  }
  for (auto& p : v) p /= total;
}

/// Incremental classifier: `partial_fit` updates from labeled instances,
/// `predict_proba` yields a distribution over [0, class_count()).
/// Before any fit, predictions are class 0 with uniform probabilities.
class Learner {
 public:
  explicit Learner(std::size_t classes) : classes_(classes) {
    if (classes == 0) throw ConfigError("class count must be positive");
  }
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  virtual void partial_fit(std::span<const Instance> batch) = 0;
  virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;
  virtual ClassIndex predict(std::span<const double> x) const { return argmax(predict_proba(x)); }
  virtual std::string name() const = 0;

  std::size_t class_count() const { return classes_; }

 protected:
  /// Validates label presence/range and a fixed feature dimension.
  ClassIndex checked_label(const Instance& inst, std::size_t& dimension) const {
    if (!inst.label) throw std::invalid_argument(name() + ": cannot fit an unlabeled instance");
    if (*inst.label >= classes_)
      throw std::invalid_argument(name() + ": label " + std::to_string(*inst.label) + " >= class count " +
                                  std::to_string(classes_));
    if (dimension == 0) {
      dimension = inst.dimension();
    } else if (inst.dimension() != dimension) {
      throw std::invalid_argument(name() + ": feature dimension " + std::to_string(inst.dimension()) +
                                  " does not match " + std::to_string(dimension));
    }
    return *inst.label;
  }

 private:
  std::size_t classes_;
};

using LearnerFactory = std::function<std::unique_ptr<Learner>()>;

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

class GaussianNB final : public Learner {
 public:
  static constexpr double kVarianceFloor = 1e-9;

  explicit GaussianNB(std::size_t classes) : Learner(classes), stats_(classes) {}

  /// Per-class batch moments are merged into the running accumulators
  /// with the pairwise (Chan et al.) update.
  void partial_fit(std::span<const Instance> batch) override {
    if (batch.empty()) return;
    std::size_t dim = dimension_;
    std::vector<ClassStats> delta(class_count());
    for (const auto& inst : batch) {
      const ClassIndex y = checked_label(inst, dim);
      auto& d = delta[y];
      if (d.mean.empty()) d.resize(dim);
      ++d.count;
      const double n = static_cast<double>(d.count);
      for (std::size_t f = 0; f < dim; ++f) {
        const double diff = inst.features[f] - d.mean[f];
        d.mean[f] += diff / n;
        d.m2[f] += diff * (inst.features[f] - d.mean[f]);
      }
    }
    dimension_ = dim;
    for (std::size_t c = 0; c < class_count(); ++c) {
      if (delta[c].count == 0) continue;
      auto& s = stats_[c];
      if (s.mean.empty()) s.resize(dimension_);
      const double na = static_cast<double>(s.count);
      const double nb = static_cast<double>(delta[c].count);
      const double n = na + nb;
      for (std::size_t f = 0; f < dimension_; ++f) {
        const double diff = delta[c].mean[f] - s.mean[f];
        s.mean[f] += diff * nb / n;
        s.m2[f] += delta[c].m2[f] + diff * diff * na * nb / n;
      }
      s.count += delta[c].count;
      total_ += delta[c].count;
    }
  }

  std::vector<double> predict_proba(std::span<const double> x) const override {
    if (total_ == 0) return uniform_proba(class_count());
    std::vector<double> log_post(class_count(), -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < class_count(); ++c) {
      const auto& s = stats_[c];
      if (s.count == 0) continue;
      double lp = std::log(static_cast<double>(s.count) / static_cast<double>(total_));
      for (std::size_t f = 0; f < dimension_ && f < x.size(); ++f) {
        const double var = variance(c, f);
        const double diff = x[f] - s.mean[f];
        lp += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
      }
      log_post[c] = lp;
    }
    const double top = *std::max_element(log_post.begin(), log_post.end());
    std::vector<double> proba(class_count());
    for (std::size_t c = 0; c < class_count(); ++c) proba[c] = std::exp(log_post[c] - top);
    normalize(proba);
    return proba;
  }

  std::string name() const override { return "GaussianNB"; }

  std::size_t count(ClassIndex c) const { return stats_[c].count; }
  std::size_t total() const { return total_; }
  std::size_t dimension() const { return dimension_; }
  double prior(ClassIndex c) const {
    return total_ == 0 ? 1.0 / static_cast<double>(class_count())
                       : static_cast<double>(stats_[c].count) / static_cast<double>(total_);
  }
  double mean(ClassIndex c, std::size_t f) const { return stats_[c].mean.empty() ? 0.0 : stats_[c].mean[f]; }
  /// Unbiased sample variance, floored.
  double variance(ClassIndex c, std::size_t f) const {
    const auto& s = stats_[c];
    if (s.count < 2) return kVarianceFloor;
    return std::max(s.m2[f] / static_cast<double>(s.count - 1), kVarianceFloor);
  }

 private:
  struct ClassStats {
    std::size_t count = 0;
    std::vector<double> mean, m2;
    void resize(std::size_t d) {
      mean.assign(d, 0.0);
      m2.assign(d, 0.0);
    }
  };

  std::vector<ClassStats> stats_;
  std::size_t total_ = 0;
  std::size_t dimension_ = 0;
};

// ---------------------------------------------------------------------------
// Hoeffding tree
// ---------------------------------------------------------------------------

/// Confidence radius sqrt(R^2 ln(1/delta) / 2n).
inline double hoeffding_bound(double range, double delta, double n) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("hoeffding_bound: delta must lie in (0,1]");
  if (!(range > 0.0)) throw std::domain_error("hoeffding_bound: range must be positive");
  if (!(n >= 1.0)) throw std::domain_error("hoeffding_bound: n must be at least 1");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

/// Shannon entropy (bits) of an unnormalized class distribution.
inline double entropy(std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

/// Running normal approximation of one numeric feature for one class.
struct GaussianEstimator {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x) {
    n += 1.0;
    const double diff = x - mean;
    mean += diff / n;
    m2 += diff * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }

  double stddev() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0)) : 0.0; }

  /// Estimated fraction of observed values <= t.
  double fraction_at_or_below(double t) const {
    const double sd = stddev();
    if (sd <= 0.0) return mean <= t ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(t - mean) / (sd * M_SQRT2));
  }

  double density(double x) const {
    const double var = std::max(n > 1.0 ? m2 / (n - 1.0) : 0.0, GaussianNB::kVarianceFloor);
    const double diff = x - mean;
    return std::exp(-diff * diff / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
  }
};

enum class LeafPrediction { majority_class, naive_bayes_adaptive };

struct HoeffdingTreeParams {
  std::size_t grace_period = 200;
  double split_confidence = 1e-7;
  double tie_threshold = 0.05;
  std::size_t candidate_thresholds = 10;
  /// Smallest fraction of the leaf weight either branch of a split may receive.
  double min_branch_fraction = 0.01;
  LeafPrediction leaf_prediction = LeafPrediction::naive_bayes_adaptive;
};

/// VFDT over numeric features with per-class Gaussian split estimators.
/// Split decisions are final; there is no pruning or drift adaptation.
class HoeffdingTree final : public Learner {
 public:
  explicit HoeffdingTree(std::size_t classes, HoeffdingTreeParams params = {})
      : Learner(classes), params_(params) {
    if (params_.grace_period == 0) throw ConfigError("grace period must be positive");
    if (!(params_.split_confidence > 0.0 && params_.split_confidence < 1.0))
      throw ConfigError("split confidence must lie in (0,1)");
    if (params_.candidate_thresholds == 0) throw ConfigError("need at least one candidate threshold");
    nodes_.push_back(make_leaf(std::vector<double>(classes, 0.0)));
  }

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) learn_one(inst);
  }

  std::vector<double> predict_proba(std::span<const double> x) const override {
    const Node& leaf = nodes_[route(x)];
    if (params_.leaf_prediction == LeafPrediction::naive_bayes_adaptive && leaf.nb_correct > leaf.mc_correct)
      return naive_bayes_proba(leaf, x);
    auto proba = leaf.class_counts;
    normalize(proba);
    return proba;
  }

  std::string name() const override { return "HoeffdingTree"; }

  const HoeffdingTreeParams& params() const { return params_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
  }
  std::size_t depth() const { return depth_of(0); }
  std::size_t instances_fitted() const { return fitted_; }

  /// Class counts summed over all leaves. Split children inherit their
  /// parent's counts apportioned by the split estimate, so this total
  /// equals the number of fitted instances up to rounding.
  std::vector<double> leaf_count_totals() const {
    std::vector<double> total(class_count(), 0.0);
    for (const auto& n : nodes_)
      if (n.leaf)
        for (std::size_t c = 0; c < total.size(); ++c) total[c] += n.class_counts[c];
    return total;
  }

  /// Feature and threshold at the root, if it has split.
  std::optional<std::pair<std::size_t, double>> root_split() const {
    if (nodes_[0].leaf) return std::nullopt;
    return std::make_pair(nodes_[0].feature, nodes_[0].threshold);
  }

 private:
  struct Node {
    bool leaf = true;
    // split nodes
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
    // leaves
    std::vector<double> class_counts;
    std::vector<std::vector<GaussianEstimator>> estimators;  // [class][feature]
    double observed = 0.0;
    double observed_at_last_attempt = 0.0;
    double mc_correct = 0.0;
    double nb_correct = 0.0;
  };

  struct Candidate {
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::vector<double> left_fraction;  // per class
  };

  Node make_leaf(std::vector<double> counts) const {
    Node n;
    n.class_counts = std::move(counts);
    return n;
  }

  std::size_t route(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return i;
  }

  std::size_t depth_of(std::size_t i) const {
    if (nodes_[i].leaf) return 0;
    return 1 + std::max(depth_of(nodes_[i].left), depth_of(nodes_[i].right));
  }

  std::vector<double> naive_bayes_proba(const Node& leaf, std::span<const double> x) const {
    std::vector<double> log_post(class_count(), -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < class_count(); ++c) {
      if (!(leaf.class_counts[c] > 0.0)) continue;
      double lp = std::log(leaf.class_counts[c]);
      if (c < leaf.estimators.size())
        for (std::size_t f = 0; f < leaf.estimators[c].size(); ++f)
          if (leaf.estimators[c][f].n > 0.0) lp += std::log(std::max(leaf.estimators[c][f].density(x[f]), 1e-300));
      log_post[c] = lp;
    }
    const double top = *std::max_element(log_post.begin(), log_post.end());
    std::vector<double> proba(class_count(), 0.0);
    if (!std::isfinite(top)) return uniform_proba(class_count());
    for (std::size_t c = 0; c < class_count(); ++c) proba[c] = std::exp(log_post[c] - top);
    normalize(proba);
    return proba;
  }

  void learn_one(const Instance& inst) {
    const ClassIndex y = checked_label(inst, dimension_);
    const std::size_t idx = route(inst.features);
    Node& leaf = nodes_[idx];
    if (params_.leaf_prediction == LeafPrediction::naive_bayes_adaptive) {
      if (argmax(leaf.class_counts) == y) leaf.mc_correct += 1.0;
      if (argmax(naive_bayes_proba(leaf, inst.features)) == y) leaf.nb_correct += 1.0;
    }
    if (leaf.estimators.empty()) leaf.estimators.assign(class_count(), std::vector<GaussianEstimator>(dimension_));
    for (std::size_t f = 0; f < dimension_; ++f) leaf.estimators[y][f].add(inst.features[f]);
    leaf.class_counts[y] += 1.0;
    leaf.observed += 1.0;
    ++fitted_;
    if (leaf.observed - leaf.observed_at_last_attempt >= static_cast<double>(params_.grace_period)) {
      leaf.observed_at_last_attempt = leaf.observed;
      attempt_split(idx);
    }
  }

  /// Best candidate per feature, by information gain over the leaf's own observations.
  std::vector<Candidate> best_per_feature(const Node& leaf) const {
    std::vector<double> observed(class_count(), 0.0);
    for (std::size_t c = 0; c < class_count(); ++c) observed[c] = leaf.estimators[c].empty() ? 0.0 : leaf.estimators[c][0].n;
    const double parent_h = entropy(observed);
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    std::vector<Candidate> out;
    for (std::size_t f = 0; f < dimension_; ++f) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t c = 0; c < class_count(); ++c) {
        if (leaf.estimators[c][f].n == 0.0) continue;
        lo = std::min(lo, leaf.estimators[c][f].min);
        hi = std::max(hi, leaf.estimators[c][f].max);
      }
      if (!(hi > lo)) continue;
      Candidate best;
      bool found = false;
      const auto steps = static_cast<double>(params_.candidate_thresholds + 1);
      for (std::size_t i = 1; i <= params_.candidate_thresholds; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / steps;
        std::vector<double> left(class_count(), 0.0), right(class_count(), 0.0), frac(class_count(), 0.0);
        for (std::size_t c = 0; c < class_count(); ++c) {
          if (observed[c] == 0.0) continue;
          frac[c] = leaf.estimators[c][f].fraction_at_or_below(t);
          left[c] = observed[c] * frac[c];
          right[c] = observed[c] - left[c];
        }
        const double wl = std::accumulate(left.begin(), left.end(), 0.0);
        const double wr = total - wl;
        if (wl < params_.min_branch_fraction * total || wr < params_.min_branch_fraction * total) continue;
        const double gain = parent_h - (wl / total) * entropy(left) - (wr / total) * entropy(right);
        if (!found || gain > best.gain) {
          best = Candidate{gain, f, t, frac};
          found = true;
        }
      }
      if (found) out.push_back(std::move(best));
    }
    return out;
  }

  void attempt_split(std::size_t idx) {
    const Node& leaf = nodes_[idx];
    const auto nonzero = std::count_if(leaf.class_counts.begin(), leaf.class_counts.end(), [](double c) { return c > 0.0; });
    if (nonzero < 2) return;

    auto candidates = best_per_feature(leaf);
    if (candidates.empty()) return;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.gain > b.gain; });
    const Candidate& best = candidates[0];
    // The "no split" alternative has zero gain and always competes.
    const double second = candidates.size() > 1 ? std::max(candidates[1].gain, 0.0) : 0.0;
    const double range = std::log2(static_cast<double>(std::max<std::size_t>(class_count(), 2)));
    const double eps = hoeffding_bound(range, params_.split_confidence, leaf.observed);
    if (!(best.gain > 1e-12)) return;
    if (!(best.gain - second > eps || eps < params_.tie_threshold)) return;

    std::vector<double> left(class_count()), right(class_count());
    const double overall_left = [&] {
      double wl = 0.0, w = 0.0;
      for (std::size_t c = 0; c < class_count(); ++c) {
        const double n = leaf.estimators[c][0].n;
        wl += n * best.left_fraction[c];
        w += n;
      }
      return w > 0.0 ? wl / w : 0.5;
    }();
    for (std::size_t c = 0; c < class_count(); ++c) {
      const double frac = leaf.estimators[c][0].n > 0.0 ? best.left_fraction[c] : overall_left;
      left[c] = leaf.class_counts[c] * frac;
      right[c] = leaf.class_counts[c] - left[c];
    }
    const std::size_t feature = best.feature;
    const double threshold = best.threshold;
    nodes_.push_back(make_leaf(std::move(left)));
    nodes_.push_back(make_leaf(std::move(right)));
    Node& split = nodes_[idx];
    split.leaf = false;
    split.feature = feature;
    split.threshold = threshold;
    split.left = nodes_.size() - 2;
    split.right = nodes_.size() - 1;
    split.class_counts.clear();
    split.estimators.clear();
  }

  HoeffdingTreeParams params_;
  std::vector<Node> nodes_;
  std::size_t dimension_ = 0;
  std::size_t fitted_ = 0;
};

// ---------------------------------------------------------------------------
// Baseline and online bagging
// ---------------------------------------------------------------------------

/// Predicts the most frequent class seen so far.
class MajorityClass final : public Learner {
 public:
  explicit MajorityClass(std::size_t classes) : Learner(classes), counts_(classes, 0.0) {}

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) counts_[checked_label(inst, dimension_)] += 1.0;
  }
  std::vector<double> predict_proba(std::span<const double>) const override {
    auto p = counts_;
    normalize(p);
    return p;
  }
  std::string name() const override { return "MajorityClass"; }

 private:
  std::vector<double> counts_;
  std::size_t dimension_ = 0;
};

/// Oza-style online bagging: each member sees each instance k ~ Poisson(lambda) times.
class OnlineBagging final : public Learner {
 public:
  OnlineBagging(std::size_t classes, std::size_t members, const LearnerFactory& factory, double lambda,
                std::uint64_t seed)
      : Learner(classes), lambda_(lambda), rng_(seed), updates_(members, 0) {
    if (members == 0) throw ConfigError("online bagging needs at least one member");
    if (!(lambda >= 0.0)) throw ConfigError("online bagging lambda must be nonnegative");
    members_.reserve(members);
    for (std::size_t i = 0; i < members; ++i) members_.push_back(factory());
  }

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) {
      checked_label(inst, dimension_);
      ++instances_seen_;
      for (std::size_t m = 0; m < members_.size(); ++m) {
        const unsigned k = rng_.poisson(lambda_);
        for (unsigned j = 0; j < k; ++j) members_[m]->partial_fit(std::span(&inst, 1));
        updates_[m] += k;
      }
    }
  }

  /// Fraction of member votes per class; uniform before any fit.
  std::vector<double> predict_proba(std::span<const double> x) const override {
    if (instances_seen_ == 0) return uniform_proba(class_count());
    std::vector<double> votes(class_count(), 0.0);
    for (const auto& m : members_) votes[m->predict(x)] += 1.0;
    normalize(votes);
    return votes;
  }

  std::string name() const override { return "OnlineBagging"; }

  double lambda() const { return lambda_; }
  std::size_t size() const { return members_.size(); }
  const Learner& member(std::size_t i) const { return *members_[i]; }
  /// Total replicated updates applied to member i.
  std::uint64_t updates(std::size_t i) const { return updates_[i]; }
  /// Instances offered to the ensemble (each reaches every member's Poisson draw).
  std::uint64_t instances_seen() const { return instances_seen_; }

 private:
  double lambda_;
  Rng rng_;
  std::vector<std::unique_ptr<Learner>> members_;
  std::vector<std::uint64_t> updates_;
  std::uint64_t instances_seen_ = 0;
  std::size_t dimension_ = 0;
};

enum class LearnerKind { naive_bayes, hoeffding_tree };

inline LearnerKind parse_learner_kind(std::string_view s) {
  if (s == "nb") return LearnerKind::naive_bayes;
  if (s == "ht") return LearnerKind::hoeffding_tree;
  throw ConfigError("unknown learner '" + std::string(s) + "' (expected nb or ht)");
}

inline std::string_view to_string(LearnerKind k) { return k == LearnerKind::naive_bayes ? "nb" : "ht"; }

inline LearnerFactory make_learner_factory(LearnerKind kind, std::size_t classes) {
  if (kind == LearnerKind::naive_bayes) return [classes] { return std::make_unique<GaussianNB>(classes); };
  return [classes] { return std::make_unique<HoeffdingTree>(classes); };
}

}  // namespace dynsel
