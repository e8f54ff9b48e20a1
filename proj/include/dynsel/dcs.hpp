#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/error.hpp"
#include "dynsel/learners.hpp"
#include "dynsel/pool.hpp"
#include "dynsel/validation.hpp"

namespace dynsel {

/// Everything a selection rule may look at for one query. Members are
/// indexed as in the pool; neighbors nearest first.
struct CompetenceContext {
  Neighborhood neighborhood;
  std::size_t class_count = 0;
  /// True label per neighbor.
  std::vector<ClassIndex> labels;
  /// correct[i][n]: member i predicts neighbor n's true label.
  std::vector<std::vector<bool>> correct;
  /// posteriors[i][n]: member i's predict_proba on neighbor n.
  std::vector<std::vector<std::vector<double>>> posteriors;
  std::vector<ClassIndex> query_predictions;
  std::vector<std::vector<double>> query_posteriors;

  std::size_t members() const { return query_predictions.size(); }
  std::size_t neighbors() const { return labels.size(); }
  double distance(std::size_t n) const { return neighborhood.neighbors[n].distance; }
  /// Member i's predicted class on neighbor n.
  ClassIndex neighbor_prediction(std::size_t i, std::size_t n) const { return argmax(posteriors[i][n]); }
};

struct SelectionResult {
  /// Members that voted; the whole pool when the rule fell back.
  std::vector<std::size_t> selected;
  /// Vote weight per selected member (parallel to `selected`).
  std::vector<double> weights;
  ClassIndex prediction = 0;
  bool fallback_used = false;
  /// Neighbors the decision was based on (KNORA-E may shrink it; MCB may filter it).
  std::size_t region_size = 0;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

enum class NeighborSpace { feature, profile };

enum class DcsRule { knora_e, knora_u, ola, lca, a_priori, a_posteriori, mcb, rank, knop };

inline constexpr std::array<DcsRule, 9> kAllRules{DcsRule::knora_e, DcsRule::knora_u, DcsRule::ola,
                                                  DcsRule::lca,     DcsRule::a_priori, DcsRule::a_posteriori,
                                                  DcsRule::mcb,     DcsRule::rank,    DcsRule::knop};

inline std::string_view to_string(DcsRule r) {
  switch (r) {
    case DcsRule::knora_e: return "knora-e";
    case DcsRule::knora_u: return "knora-u";
    case DcsRule::ola: return "ola";
    case DcsRule::lca: return "lca";
    case DcsRule::a_priori: return "apriori";
    case DcsRule::a_posteriori: return "aposteriori";
    case DcsRule::mcb: return "mcb";
    case DcsRule::rank: return "rank";
    case DcsRule::knop: return "knop";
  }
  return "?";
}

inline DcsRule parse_dcs_rule(std::string_view s) {
  for (auto r : kAllRules)
    if (to_string(r) == s) return r;
  throw ConfigError("unknown dcs rule '" + std::string(s) +
                    "' (expected knora-e, knora-u, ola, lca, apriori, aposteriori, mcb, rank or knop)");
}

inline NeighborSpace space_for(DcsRule r) { return r == DcsRule::knop ? NeighborSpace::profile : NeighborSpace::feature; }

/// Evaluates every member once on every neighbor and on the query.
inline CompetenceContext make_context(const Pool& pool, Neighborhood nh, std::size_t classes) {
  if (pool.empty() || nh.empty()) throw NotReadyError();
  CompetenceContext ctx;
  ctx.class_count = classes;
  ctx.labels.reserve(nh.size());
  for (const auto& n : nh.neighbors) ctx.labels.push_back(*n.instance.label);
  const std::size_t m = pool.size();
  ctx.correct.assign(m, std::vector<bool>(nh.size()));
  ctx.posteriors.assign(m, {});
  for (std::size_t i = 0; i < m; ++i) {
    ctx.posteriors[i].reserve(nh.size());
    for (std::size_t n = 0; n < nh.size(); ++n) {
      ctx.posteriors[i].push_back(pool[i].predict_proba(nh[n].instance.features));
      ctx.correct[i][n] = argmax(ctx.posteriors[i][n]) == ctx.labels[n];
    }
    ctx.query_posteriors.push_back(pool[i].predict_proba(nh.query));
    ctx.query_predictions.push_back(argmax(ctx.query_posteriors.back()));
  }
  ctx.neighborhood = std::move(nh);
  return ctx;
}

inline CompetenceContext build_context(const Pool& pool, const ValidationSet& vs, std::span<const double> x,
                                       std::size_t k, NeighborSpace space, std::size_t classes) {
  if (pool.empty() || vs.empty()) throw NotReadyError();
  auto nh = space == NeighborSpace::feature ? knn_query(vs, x, k) : knn_output_profiles(vs, pool, x, k);
  return make_context(pool, std::move(nh), classes);
}

/// Profile-space variant reusing cached validation profiles.
inline CompetenceContext build_context(const Pool& pool, const ValidationSet& vs,
                                       std::span<const OutputProfile> profiles, std::span<const double> x,
                                       std::size_t k, std::size_t classes) {
  if (pool.empty() || vs.empty()) throw NotReadyError();
  return make_context(pool, knn_output_profiles(vs, pool, profiles, x, k), classes);
}

namespace selectors {

inline constexpr double kZeroDistance = 1e-12;
inline constexpr double kMcbSimilarity = 0.7;

namespace detail {

inline void require_pool(const CompetenceContext& ctx) {
  if (ctx.members() == 0) throw std::invalid_argument("selection over an empty pool");
}

inline SelectionResult pool_vote(const CompetenceContext& ctx) {
  SelectionResult r;
  r.fallback_used = true;
  r.selected.resize(ctx.members());
  std::iota(r.selected.begin(), r.selected.end(), std::size_t{0});
  r.weights.assign(ctx.members(), 1.0);
  r.prediction = majority_vote(ctx.query_predictions, ctx.class_count);
  r.region_size = ctx.neighbors();
  return r;
}

/// Single best member by score; ties to the lowest index.
inline SelectionResult single_best(const CompetenceContext& ctx, std::span<const double> score, std::size_t region) {
  SelectionResult r;
  const std::size_t best = argmax(score);
  r.selected = {best};
  r.weights = {1.0};
  r.prediction = ctx.query_predictions[best];
  r.region_size = region;
  return r;
}

inline double weight(double distance) { return 1.0 / (distance == 0.0 ? kZeroDistance : distance); }

/// Local accuracy per member over a subset of neighbor positions.
inline std::vector<double> local_accuracy(const CompetenceContext& ctx, std::span<const std::size_t> region) {
  std::vector<double> acc(ctx.members(), 0.0);
  if (region.empty()) return acc;
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    std::size_t hits = 0;
    for (auto n : region) hits += ctx.correct[i][n] ? 1 : 0;
    acc[i] = static_cast<double>(hits) / static_cast<double>(region.size());
  }
  return acc;
}

inline std::vector<std::size_t> all_neighbors(const CompetenceContext& ctx) {
  std::vector<std::size_t> v(ctx.neighbors());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace detail

/// KNORA-Eliminate: members correct on the whole neighborhood vote; the
/// farthest neighbor is dropped until some member qualifies.
inline SelectionResult knora_e(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  for (std::size_t region = ctx.neighbors(); region > 0; --region) {
    SelectionResult r;
    for (std::size_t i = 0; i < ctx.members(); ++i) {
      const auto& row = ctx.correct[i];
      if (std::all_of(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(region), [](bool b) { return b; }))
        r.selected.push_back(i);
    }
    if (r.selected.empty()) continue;
    std::vector<ClassIndex> votes;
    for (auto i : r.selected) votes.push_back(ctx.query_predictions[i]);
    r.weights.assign(r.selected.size(), 1.0);
    r.prediction = majority_vote(votes, ctx.class_count);
    r.region_size = region;
    return r;
  }
  auto r = detail::pool_vote(ctx);
  r.region_size = 0;
  return r;
}

/// KNORA-Union: each member votes with weight equal to its correct-neighbor count.
inline SelectionResult knora_u(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  SelectionResult r;
  std::vector<double> tally(ctx.class_count, 0.0);
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    const auto hits = static_cast<double>(std::count(ctx.correct[i].begin(), ctx.correct[i].end(), true));
    if (hits == 0.0) continue;
    r.selected.push_back(i);
    r.weights.push_back(hits);
    tally[ctx.query_predictions[i]] += hits;
  }
  if (r.selected.empty()) return detail::pool_vote(ctx);
  r.prediction = argmax(tally);
  r.region_size = ctx.neighbors();
  return r;
}

/// Overall local accuracy.
inline SelectionResult ola(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  const auto region = detail::all_neighbors(ctx);
  return detail::single_best(ctx, detail::local_accuracy(ctx, region), region.size());
}

/// Local class accuracy: accuracy restricted to neighbors whose true label
/// is the member's predicted class for the query.
inline SelectionResult lca(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  std::vector<double> score(ctx.members(), 0.0);
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    const ClassIndex c = ctx.query_predictions[i];
    std::size_t with_class = 0, hits = 0;
    for (std::size_t n = 0; n < ctx.neighbors(); ++n) {
      if (ctx.labels[n] != c) continue;
      ++with_class;
      hits += ctx.correct[i][n] ? 1 : 0;
    }
    score[i] = with_class == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(with_class);
  }
  return detail::single_best(ctx, score, ctx.neighbors());
}

/// Distance-weighted mean posterior of each neighbor's true class.
inline SelectionResult a_priori(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  std::vector<double> score(ctx.members(), 0.0);
  double total_w = 0.0;
  for (std::size_t n = 0; n < ctx.neighbors(); ++n) total_w += detail::weight(ctx.distance(n));
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    double s = 0.0;
    for (std::size_t n = 0; n < ctx.neighbors(); ++n)
      s += ctx.posteriors[i][n][ctx.labels[n]] * detail::weight(ctx.distance(n));
    score[i] = total_w > 0.0 ? s / total_w : 0.0;
  }
  return detail::single_best(ctx, score, ctx.neighbors());
}

/// Weighted share of the member's posterior mass on its predicted class
/// that falls on neighbors truly of that class.
inline SelectionResult a_posteriori(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  std::vector<double> score(ctx.members(), 0.0);
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    const ClassIndex c = ctx.query_predictions[i];
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < ctx.neighbors(); ++n) {
      const double mass = ctx.posteriors[i][n][c] * detail::weight(ctx.distance(n));
      den += mass;
      if (ctx.labels[n] == c) num += mass;
    }
    score[i] = den > 0.0 ? num / den : 0.0;
  }
  return detail::single_best(ctx, score, ctx.neighbors());
}

/// Multiple classifier behavior: keep neighbors whose pool-wide prediction
/// vector agrees with the query's on at least `similarity` of the members,
/// then OLA over the survivors (or the full neighborhood if none survive).
inline SelectionResult mcb(const CompetenceContext& ctx, double similarity = kMcbSimilarity) {
  detail::require_pool(ctx);
  std::vector<std::size_t> region;
  for (std::size_t n = 0; n < ctx.neighbors(); ++n) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < ctx.members(); ++i) agree += ctx.neighbor_prediction(i, n) == ctx.query_predictions[i];
    if (static_cast<double>(agree) / static_cast<double>(ctx.members()) >= similarity) region.push_back(n);
  }
  if (region.empty()) region = detail::all_neighbors(ctx);
  return detail::single_best(ctx, detail::local_accuracy(ctx, region), region.size());
}

/// DCS-Rank: length of the run of correct classifications from the nearest neighbor outward.
inline SelectionResult rank(const CompetenceContext& ctx) {
  detail::require_pool(ctx);
  std::vector<double> score(ctx.members(), 0.0);
  for (std::size_t i = 0; i < ctx.members(); ++i) {
    const auto& row = ctx.correct[i];
    score[i] = static_cast<double>(std::find(row.begin(), row.end(), false) - row.begin());
  }
  return detail::single_best(ctx, score, ctx.neighbors());
}

/// KNOP: KNORA-U aggregation over a neighborhood found in output-profile space.
inline SelectionResult knop(const CompetenceContext& profile_ctx) { return knora_u(profile_ctx); }

}  // namespace selectors

inline SelectionResult select(DcsRule rule, const CompetenceContext& ctx) {
  switch (rule) {
    case DcsRule::knora_e: return selectors::knora_e(ctx);
    case DcsRule::knora_u: return selectors::knora_u(ctx);
    case DcsRule::ola: return selectors::ola(ctx);
    case DcsRule::lca: return selectors::lca(ctx);
    case DcsRule::a_priori: return selectors::a_priori(ctx);
    case DcsRule::a_posteriori: return selectors::a_posteriori(ctx);
    case DcsRule::mcb: return selectors::mcb(ctx);
    case DcsRule::rank: return selectors::rank(ctx);
    case DcsRule::knop: return selectors::knop(ctx);
  }
  throw std::logic_error("unhandled dcs rule");
}

}  // namespace dynsel
