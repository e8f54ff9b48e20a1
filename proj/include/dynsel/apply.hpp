#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dynsel/core.hpp"
#include "dynsel/dcs.hpp"
#include "dynsel/error.hpp"
#include "dynsel/learners.hpp"
#include "dynsel/metrics.hpp"
#include "dynsel/pool.hpp"
#include "dynsel/validation.hpp"

namespace dynsel {

/// A stream classifier that owns its ensemble and validation data.
/// Not-ready predictions return class 0.
class StreamClassifier {
 public:
  virtual ~StreamClassifier() = default;
  virtual void partial_fit(std::span<const Instance> batch) = 0;
  virtual ClassIndex predict(std::span<const double> x) const = 0;
  virtual bool ready() const = 0;
  virtual std::string_view name() const = 0;
};

enum class MethodKind { dynse, desdd, mde };

inline std::string_view to_string(MethodKind m) {
  switch (m) {
    case MethodKind::dynse: return "dynse";
    case MethodKind::desdd: return "desdd";
    case MethodKind::mde: return "mde";
  }
  return "?";
}

inline MethodKind parse_method(std::string_view s) {
  if (s == "dynse") return MethodKind::dynse;
  if (s == "desdd") return MethodKind::desdd;
  if (s == "mde") return MethodKind::mde;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected dynse, desdd or mde)");
}

enum class PruningPolicy { age, accuracy };

inline std::string_view to_string(PruningPolicy p) { return p == PruningPolicy::age ? "age" : "accuracy"; }

inline PruningPolicy parse_pruning(std::string_view s) {
  if (s == "age") return PruningPolicy::age;
  if (s == "accuracy") return PruningPolicy::accuracy;
  throw ConfigError("unknown pruning policy '" + std::string(s) + "' (expected age or accuracy)");
}

namespace detail {

/// Accuracy of a learner over a set of labeled instances.
inline double accuracy_on(const Learner& l, std::span<const Instance> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& inst : data) hits += l.predict(inst.features) == *inst.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Index of the smallest score; ties resolve to the lowest index (the oldest member).
inline std::size_t argmin(std::span<const double> v) {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[worst]) worst = i;
  return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DYNSE
// ---------------------------------------------------------------------------

struct DynseParams {
  std::size_t chunk_size = 1000;
  std::size_t max_pool = 10;
  std::size_t window = ValidationSet::kDefaultWindow;
  std::size_t k = 7;
  DcsRule rule = DcsRule::knora_e;
  PruningPolicy pruning = PruningPolicy::age;
};

/// Chunk-based pool: one fresh learner per full chunk, the last W chunks
/// as validation data, and a DCS rule choosing members per query.
class Dynse final : public StreamClassifier {
 public:
  Dynse(std::size_t classes, LearnerFactory factory, DynseParams params = {})
      : classes_(classes),
        factory_(std::move(factory)),
        params_(params),
        buffer_(params.chunk_size),
        pool_(params.max_pool),
        validation_(params.window) {
    if (params.k == 0) throw ConfigError("k must be positive");
  }

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) {
      buffer_.push(inst);
      if (buffer_.full()) complete_chunk();
    }
  }

  ClassIndex predict(std::span<const double> x) const override {
    if (!ready()) return 0;
    return select(params_.rule, context(x)).prediction;
  }

  bool ready() const override { return !pool_.empty() && !validation_.empty(); }
  std::string_view name() const override { return "dynse"; }

  /// Full selection outcome for a query; requires ready().
  SelectionResult explain(std::span<const double> x) const { return select(params_.rule, context(x)); }

  CompetenceContext context(std::span<const double> x) const {
    if (params_.rule == DcsRule::knop) return build_context(pool_, validation_, profiles_, x, params_.k, classes_);
    return build_context(pool_, validation_, x, params_.k, NeighborSpace::feature, classes_);
  }

  /// Installs a trained member and a validation chunk directly, bypassing
  /// chunk buffering. Used to assemble fixtures.
  void adopt(std::unique_ptr<Learner> learner, std::optional<Chunk> validation_chunk = std::nullopt) {
    pool_.add(std::move(learner), chunks_completed_);
    if (validation_chunk) validation_.push_chunk(std::move(*validation_chunk));
    refresh_profiles();
  }

  const Pool& pool() const { return pool_; }
  const ValidationSet& validation() const { return validation_; }
  const DynseParams& params() const { return params_; }
  std::size_t chunks_completed() const { return chunks_completed_; }
  std::size_t learners_created() const { return learners_created_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  void complete_chunk() {
    auto learner = factory_();
    learner->partial_fit(buffer_.items());
    ++learners_created_;
    pool_.add(std::move(learner), chunks_completed_);
    if (!pool_.within_bound()) prune();
    validation_.push_chunk(std::move(buffer_));
    buffer_ = Chunk(params_.chunk_size);
    ++chunks_completed_;
    refresh_profiles();
  }

  void prune() {
    std::size_t victim = 0;  // oldest
    if (params_.pruning == PruningPolicy::accuracy && !validation_.empty()) {
      std::vector<double> acc(pool_.size());
      for (std::size_t i = 0; i < pool_.size(); ++i) acc[i] = detail::accuracy_on(pool_[i], validation_.instances());
      victim = detail::argmin(acc);
    }
    pool_.erase(victim);
  }

  void refresh_profiles() {
    if (params_.rule == DcsRule::knop) profiles_ = validation_profiles(validation_, pool_);
  }

  std::size_t classes_;
  LearnerFactory factory_;
  DynseParams params_;
  Chunk buffer_;
  Pool pool_;
  ValidationSet validation_;
  std::vector<OutputProfile> profiles_;
  std::size_t chunks_completed_ = 0;
  std::size_t learners_created_ = 0;
};

// ---------------------------------------------------------------------------
// DESDD
// ---------------------------------------------------------------------------

struct DesddParams {
  std::size_t chunk_size = 1000;
  std::size_t sub_ensembles = 10;
  std::size_t members = 5;
  double lambda_min = 1.0;
  double lambda_max = 10.0;
  /// Validation window length in instances; 0 means chunk_size.
  std::size_t validation_size = 0;
  std::uint64_t seed = 0;
};

/// Evenly spaced Poisson rates over [lo, hi]; a single ensemble uses lo.
inline std::vector<double> spaced_lambdas(std::size_t count, double lo, double hi) {
  std::vector<double> out(count);
  for (std::size_t e = 0; e < count; ++e)
    out[e] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(e) / static_cast<double>(count - 1);
  return out;
}

/// Several online-bagging ensembles of differing diversity; the one with
/// the best majority-vote accuracy on recent instances answers queries.
class Desdd final : public StreamClassifier {
 public:
  Desdd(std::size_t classes, const LearnerFactory& factory, DesddParams params = {})
      : classes_(classes), params_(params), lambdas_(spaced_lambdas(params.sub_ensembles, params.lambda_min, params.lambda_max)) {
    if (params.chunk_size == 0) throw ConfigError("chunk size must be positive");
    if (params.sub_ensembles == 0) throw ConfigError("DESDD needs at least one sub-ensemble");
    if (params.lambda_min < 0.0 || params.lambda_max < params.lambda_min) throw ConfigError("DESDD lambda range is invalid");
    if (params_.validation_size == 0) params_.validation_size = params.chunk_size;
    ensembles_.reserve(params.sub_ensembles);
    for (std::size_t e = 0; e < params.sub_ensembles; ++e)
      ensembles_.push_back(
          std::make_unique<OnlineBagging>(classes, params.members, factory, lambdas_[e], derive_seed(params.seed, e)));
  }

  /// Swaps in a caller-built sub-ensemble (fixtures and experiments with
  /// hand-picked rates).
  Desdd(std::size_t classes, std::vector<std::unique_ptr<OnlineBagging>> ensembles, DesddParams params)
      : classes_(classes), params_(params), ensembles_(std::move(ensembles)) {
    if (ensembles_.empty()) throw ConfigError("DESDD needs at least one sub-ensemble");
    if (params_.chunk_size == 0) throw ConfigError("chunk size must be positive");
    if (params_.validation_size == 0) params_.validation_size = params_.chunk_size;
    for (const auto& e : ensembles_) lambdas_.push_back(e->lambda());
  }

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) {
      for (auto& e : ensembles_) e->partial_fit(std::span(&inst, 1));
      window_.push_back(inst);
      if (window_.size() > params_.validation_size) window_.pop_front();
      ++seen_;
      if (seen_ % params_.chunk_size == 0) reselect();
    }
  }

  ClassIndex predict(std::span<const double> x) const override { return ensembles_[selected_]->predict(x); }

  bool ready() const override { return seen_ > 0; }
  std::string_view name() const override { return "desdd"; }

  std::size_t selected() const { return selected_; }
  std::size_t reselections() const { return reselections_; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t size() const { return ensembles_.size(); }
  const OnlineBagging& ensemble(std::size_t e) const { return *ensembles_[e]; }
  std::uint64_t instances_seen() const { return seen_; }
  const std::deque<Instance>& window() const { return window_; }

 private:
  void reselect() {
    std::vector<double> acc(ensembles_.size(), 0.0);
    for (std::size_t e = 0; e < ensembles_.size(); ++e) {
      std::size_t hits = 0;
      for (const auto& inst : window_) hits += ensembles_[e]->predict(inst.features) == *inst.label;
      acc[e] = static_cast<double>(hits);
    }
    selected_ = argmax(acc);
    ++reselections_;
  }

  std::size_t classes_;
  DesddParams params_;
  std::vector<double> lambdas_;
  std::vector<std::unique_ptr<OnlineBagging>> ensembles_;
  std::deque<Instance> window_;
  std::size_t selected_ = 0;
  std::size_t reselections_ = 0;
  std::uint64_t seen_ = 0;
};

// ---------------------------------------------------------------------------
// MDE
// ---------------------------------------------------------------------------

struct MdeParams {
  std::size_t chunk_size = 1000;
  std::size_t max_pool = 10;
  std::size_t window = ValidationSet::kDefaultWindow;
  std::size_t k_minority = 7;
};

/// Least frequent label present in the chunk; ties to the lowest class index.
inline ClassIndex minority_class(const Chunk& chunk, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (const auto& inst : chunk) ++counts[*inst.label];
  std::optional<ClassIndex> best;
  for (ClassIndex c = 0; c < classes; ++c)
    if (counts[c] > 0 && (!best || counts[c] < counts[*best])) best = c;
  return best.value_or(0);
}

/// Geometric mean of the learner's per-class recalls on the data.
inline double recall_gmean(const Learner& learner, std::span<const Instance> data, std::size_t classes) {
  ConfusionMatrix cm(classes);
  for (const auto& inst : data) cm.add(*inst.label, learner.predict(inst.features));
  return gmean(cm);
}

/// Imbalance-aware chunk ensemble: members are ranked by recall geometric
/// mean for pruning and selected per query by their accuracy on the
/// nearest validation instances of the current minority class.
class Mde final : public StreamClassifier {
 public:
  Mde(std::size_t classes, LearnerFactory factory, MdeParams params = {})
      : classes_(classes),
        factory_(std::move(factory)),
        params_(params),
        buffer_(params.chunk_size),
        pool_(params.max_pool),
        validation_(params.window) {
    if (params.k_minority == 0) throw ConfigError("minority neighbor count must be positive");
  }

  void partial_fit(std::span<const Instance> batch) override {
    for (const auto& inst : batch) {
      buffer_.push(inst);
      if (buffer_.full()) complete_chunk();
    }
  }

  ClassIndex predict(std::span<const double> x) const override {
    if (pool_.empty()) return 0;
    return competent_members_vote(x).first;
  }

  bool ready() const override { return !pool_.empty(); }
  std::string_view name() const override { return "mde"; }

  /// Prediction and the members that voted for it.
  std::pair<ClassIndex, std::vector<std::size_t>> competent_members_vote(std::span<const double> x) const {
    const auto neighbors = minority_neighbors(x);
    std::vector<std::size_t> voters;
    if (!neighbors.empty()) {
      const std::size_t needed = (neighbors.size() + 1) / 2;
      for (std::size_t i = 0; i < pool_.size(); ++i) {
        std::size_t hits = 0;
        for (auto pos : neighbors) hits += pool_[i].predict(validation_[pos].features) == minority_;
        if (hits >= needed) voters.push_back(i);
      }
    }
    if (voters.empty()) {
      voters.resize(pool_.size());
      std::iota(voters.begin(), voters.end(), std::size_t{0});
    }
    std::vector<ClassIndex> votes;
    for (auto i : voters) votes.push_back(pool_[i].predict(x));
    return {majority_vote(votes, classes_), voters};
  }

  /// Flat-view positions of the nearest validation instances of the minority class.
  std::vector<std::size_t> minority_neighbors(std::span<const double> x) const {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < validation_.size(); ++i)
      if (*validation_[i].label == minority_) cand.emplace_back(squared_distance(x, validation_[i].features), i);
    const std::size_t kk = std::min(params_.k_minority, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk), cand.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < kk; ++i) out.push_back(cand[i].second);
    return out;
  }

  /// Installs a member and validation chunk directly; `minority` overrides the tracked minority class.
  void adopt(std::unique_ptr<Learner> learner, std::optional<Chunk> validation_chunk = std::nullopt,
             std::optional<ClassIndex> minority = std::nullopt) {
    pool_.add(std::move(learner), chunks_completed_);
    if (validation_chunk) validation_.push_chunk(std::move(*validation_chunk));
    if (minority) minority_ = *minority;
  }

  const Pool& pool() const { return pool_; }
  const ValidationSet& validation() const { return validation_; }
  ClassIndex minority() const { return minority_; }
  std::size_t chunks_completed() const { return chunks_completed_; }
  std::size_t learners_created() const { return learners_created_; }

 private:
  void complete_chunk() {
    minority_ = minority_class(buffer_, classes_);
    auto learner = factory_();
    learner->partial_fit(buffer_.items());
    ++learners_created_;
    pool_.add(std::move(learner), chunks_completed_);
    std::vector<double> quality(pool_.size());
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      quality[i] = recall_gmean(pool_[i], buffer_.items(), classes_);
      pool_.member(i).quality = quality[i];
    }
    if (!pool_.within_bound()) pool_.erase(detail::argmin(quality));
    validation_.push_chunk(std::move(buffer_));
    buffer_ = Chunk(params_.chunk_size);
    ++chunks_completed_;
  }

  std::size_t classes_;
  LearnerFactory factory_;
  MdeParams params_;
  Chunk buffer_;
  Pool pool_;
  ValidationSet validation_;
  ClassIndex minority_ = 0;
  std::size_t chunks_completed_ = 0;
  std::size_t learners_created_ = 0;
};

}  // namespace dynsel
