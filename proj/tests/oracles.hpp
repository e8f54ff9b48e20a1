#pragma once

// Brute-force reference implementations used only by the test suites.
// Nothing here calls into the selection or search code it checks; each
// rule is transliterated directly from its definition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <vector>

#include "dynsel/dcs.hpp"
#include "dynsel/validation.hpp"

namespace oracle {

using dynsel::CompetenceContext;

struct Outcome {
  std::set<std::size_t> selected;
  std::size_t prediction = 0;
  bool fallback = false;
};

inline std::size_t first_max(const std::vector<double>& v) {
  double best = -1e300;
  std::size_t at = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > best) {
      best = v[i];
      at = i;
    }
  }
  return at;
}

inline std::size_t plurality(const std::vector<std::size_t>& members, const CompetenceContext& ctx,
                             const std::vector<double>& w) {
  std::vector<double> tally(ctx.class_count, 0.0);
  for (std::size_t j = 0; j < members.size(); ++j) tally[ctx.query_predictions[members[j]]] += w[j];
  return first_max(tally);
}

inline Outcome everyone(const CompetenceContext& ctx) {
  Outcome o;
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    all.push_back(i);
    o.selected.insert(i);
  }
  o.prediction = plurality(all, ctx, std::vector<double>(all.size(), 1.0));
  o.fallback = true;
  return o;
}

inline Outcome pick(const CompetenceContext& ctx, const std::vector<double>& score) {
  Outcome o;
  const auto best = first_max(score);
  o.selected = {best};
  o.prediction = ctx.query_predictions[best];
  return o;
}

inline bool predicts(const CompetenceContext& ctx, std::size_t i, std::size_t n, std::size_t cls) {
  const auto& p = ctx.posteriors[i][n];
  return first_max(p) == cls;
}

inline Outcome knora_e(const CompetenceContext& ctx) {
  const std::size_t m = ctx.query_predictions.size();
  for (std::size_t k = ctx.labels.size(); k >= 1; --k) {
    std::vector<std::size_t> oracles;
    for (std::size_t i = 0; i < m; ++i) {
      bool perfect = true;
      for (std::size_t n = 0; n < k; ++n) perfect = perfect && predicts(ctx, i, n, ctx.labels[n]);
      if (perfect) oracles.push_back(i);
    }
    if (!oracles.empty()) {
      Outcome o;
      o.selected.insert(oracles.begin(), oracles.end());
      o.prediction = plurality(oracles, ctx, std::vector<double>(oracles.size(), 1.0));
      return o;
    }
  }
  return everyone(ctx);
}

inline Outcome knora_u(const CompetenceContext& ctx) {
  std::vector<std::size_t> voters;
  std::vector<double> w;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    double hits = 0;
    for (std::size_t n = 0; n < ctx.labels.size(); ++n) hits += predicts(ctx, i, n, ctx.labels[n]) ? 1 : 0;
    if (hits > 0) {
      voters.push_back(i);
      w.push_back(hits);
    }
  }
  if (voters.empty()) return everyone(ctx);
  Outcome o;
  o.selected.insert(voters.begin(), voters.end());
  o.prediction = plurality(voters, ctx, w);
  return o;
}

inline Outcome ola_over(const CompetenceContext& ctx, const std::vector<std::size_t>& region) {
  std::vector<double> score;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    double hits = 0;
    for (auto n : region) hits += predicts(ctx, i, n, ctx.labels[n]) ? 1 : 0;
    score.push_back(hits / static_cast<double>(region.size()));
  }
  return pick(ctx, score);
}

inline std::vector<std::size_t> every_neighbor(const CompetenceContext& ctx) {
  std::vector<std::size_t> r;
  for (std::size_t n = 0; n < ctx.labels.size(); ++n) r.push_back(n);
  return r;
}

inline Outcome ola(const CompetenceContext& ctx) { return ola_over(ctx, every_neighbor(ctx)); }

inline Outcome lca(const CompetenceContext& ctx) {
  std::vector<double> score;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    const auto c = ctx.query_predictions[i];
    double num = 0, den = 0;
    for (std::size_t n = 0; n < ctx.labels.size(); ++n) {
      if (ctx.labels[n] == c) {
        den += 1;
        if (predicts(ctx, i, n, c)) num += 1;
      }
    }
    score.push_back(den > 0 ? num / den : 0.0);
  }
  return pick(ctx, score);
}

inline double w_of(double d) { return d == 0.0 ? 1e12 : 1.0 / d; }

inline Outcome a_priori(const CompetenceContext& ctx) {
  std::vector<double> score;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    double num = 0, den = 0;
    for (std::size_t n = 0; n < ctx.labels.size(); ++n) {
      const double w = w_of(ctx.neighborhood.neighbors[n].distance);
      num += ctx.posteriors[i][n][ctx.labels[n]] * w;
      den += w;
    }
    score.push_back(num / den);
  }
  return pick(ctx, score);
}

inline Outcome a_posteriori(const CompetenceContext& ctx) {
  std::vector<double> score;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    const auto c = ctx.query_predictions[i];
    double num = 0, den = 0;
    for (std::size_t n = 0; n < ctx.labels.size(); ++n) {
      const double v = ctx.posteriors[i][n][c] * w_of(ctx.neighborhood.neighbors[n].distance);
      if (ctx.labels[n] == c) num += v;
      den += v;
    }
    score.push_back(den == 0 ? 0.0 : num / den);
  }
  return pick(ctx, score);
}

inline Outcome mcb(const CompetenceContext& ctx, double sigma = 0.7) {
  const std::size_t m = ctx.query_predictions.size();
  std::vector<std::size_t> kept;
  for (std::size_t n = 0; n < ctx.labels.size(); ++n) {
    double same = 0;
    for (std::size_t i = 0; i < m; ++i) same += predicts(ctx, i, n, ctx.query_predictions[i]) ? 1 : 0;
    if (same / static_cast<double>(m) >= sigma) kept.push_back(n);
  }
  if (kept.empty()) kept = every_neighbor(ctx);
  return ola_over(ctx, kept);
}

inline Outcome rank(const CompetenceContext& ctx) {
  std::vector<double> score;
  for (std::size_t i = 0; i < ctx.query_predictions.size(); ++i) {
    double run = 0;
    for (std::size_t n = 0; n < ctx.labels.size(); ++n) {
      if (!predicts(ctx, i, n, ctx.labels[n])) break;
      run += 1;
    }
    score.push_back(run);
  }
  return pick(ctx, score);
}

inline Outcome reference(dynsel::DcsRule rule, const CompetenceContext& ctx) {
  using R = dynsel::DcsRule;
  switch (rule) {
    case R::knora_e: return knora_e(ctx);
    case R::knora_u: return knora_u(ctx);
    case R::ola: return ola(ctx);
    case R::lca: return lca(ctx);
    case R::a_priori: return a_priori(ctx);
    case R::a_posteriori: return a_posteriori(ctx);
    case R::mcb: return mcb(ctx);
    case R::rank: return rank(ctx);
    case R::knop: return knora_u(ctx);
  }
  return {};
}

inline bool agrees(const Outcome& o, const dynsel::SelectionResult& r) {
  std::set<std::size_t> got(r.selected.begin(), r.selected.end());
  return got == o.selected && r.prediction == o.prediction && r.fallback_used == o.fallback;
}

/// Random well-formed context: coarse posteriors and distances so that
/// ties in scores, votes and distances occur often.
inline CompetenceContext random_context(std::mt19937_64& rng, std::size_t max_pool = 5, std::size_t max_k = 7,
                                        std::size_t max_classes = 3) {
  auto draw = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto proba = [&](std::size_t classes) {
    std::vector<double> p(classes);
    double s = 0;
    for (auto& v : p) s += (v = static_cast<double>(draw(0, 3)));
    for (auto& v : p) v = s > 0 ? v / s : 1.0 / static_cast<double>(classes);
    return p;
  };
  CompetenceContext ctx;
  const std::size_t m = draw(1, max_pool), k = draw(1, max_k);
  ctx.class_count = draw(1, max_classes);
  std::vector<double> d(k);
  for (auto& v : d) v = 0.5 * static_cast<double>(draw(0, 6));
  std::sort(d.begin(), d.end());
  for (std::size_t n = 0; n < k; ++n) {
    dynsel::Neighbor nb;
    nb.distance = d[n];
    nb.position = n;
    nb.instance = dynsel::Instance({static_cast<double>(n)}, draw(0, ctx.class_count - 1));
    ctx.labels.push_back(*nb.instance.label);
    ctx.neighborhood.neighbors.push_back(nb);
  }
  ctx.neighborhood.query = {0.0};
  ctx.posteriors.assign(m, {});
  ctx.correct.assign(m, std::vector<bool>(k));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t n = 0; n < k; ++n) {
      ctx.posteriors[i].push_back(proba(ctx.class_count));
      ctx.correct[i][n] = first_max(ctx.posteriors[i][n]) == ctx.labels[n];
    }
    ctx.query_posteriors.push_back(proba(ctx.class_count));
    ctx.query_predictions.push_back(first_max(ctx.query_posteriors.back()));
  }
  return ctx;
}

/// Exhaustive k-NN: every distance, stable sort (insertion order breaks ties).
inline std::vector<std::size_t> knn_scan(const std::vector<std::vector<double>>& points, const std::vector<double>& q,
                                         std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (points[i][j] - q[j]) * (points[i][j] - q[j]);
    all.emplace_back(std::sqrt(s), i);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

}  // namespace oracle
