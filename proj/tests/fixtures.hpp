#pragma once

#include <map>
#include <memory>
#include <vector>

#include "dynsel/dcs.hpp"
#include "dynsel/learners.hpp"

namespace fixtures {

/// Learner with a fixed answer per value of feature 0; unknown inputs get `fallback`.
class ScriptedLearner final : public dynsel::Learner {
 public:
  ScriptedLearner(std::size_t classes, std::map<double, std::size_t> answers, std::size_t fallback = 0,
                  double confidence = 0.9)
      : Learner(classes), answers_(std::move(answers)), fallback_(fallback), confidence_(confidence) {}

  void partial_fit(std::span<const dynsel::Instance> batch) override { fits_ += batch.size(); }

  std::vector<double> predict_proba(std::span<const double> x) const override {
    auto it = answers_.find(x[0]);
    const std::size_t cls = it == answers_.end() ? fallback_ : it->second;
    const double rest = class_count() > 1 ? (1.0 - confidence_) / static_cast<double>(class_count() - 1) : 0.0;
    std::vector<double> p(class_count(), rest);
    p[cls] = class_count() > 1 ? confidence_ : 1.0;
    return p;
  }

  std::string name() const override { return "Scripted"; }
  std::size_t fits() const { return fits_; }

 private:
  std::map<double, std::size_t> answers_;
  std::size_t fallback_;
  double confidence_;
  std::size_t fits_ = 0;
};

/// Hand-built context from a correctness matrix. Members put `confidence`
/// on the class they predict and split the rest evenly; a member that is
/// wrong on a neighbor predicts the next class modulo C.
inline dynsel::CompetenceContext context_from(const std::vector<std::size_t>& labels,
                                              const std::vector<std::vector<bool>>& correct,
                                              const std::vector<std::size_t>& query_predictions,
                                              std::size_t classes = 2, std::vector<double> distances = {},
                                              double confidence = 0.9) {
  if (distances.empty())
    for (std::size_t n = 0; n < labels.size(); ++n) distances.push_back(static_cast<double>(n + 1));
  auto proba_for = [&](std::size_t cls) {
    std::vector<double> p(classes, (1.0 - confidence) / static_cast<double>(classes - 1));
    p[cls] = confidence;
    return p;
  };
  dynsel::CompetenceContext ctx;
  ctx.class_count = classes;
  ctx.labels = labels;
  ctx.correct = correct;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    dynsel::Neighbor nb;
    nb.instance = dynsel::Instance({static_cast<double>(n + 1)}, labels[n]);
    nb.distance = distances[n];
    nb.position = n;
    ctx.neighborhood.neighbors.push_back(nb);
  }
  ctx.neighborhood.query = {0.0};
  ctx.posteriors.resize(correct.size());
  for (std::size_t i = 0; i < correct.size(); ++i) {
    for (std::size_t n = 0; n < labels.size(); ++n)
      ctx.posteriors[i].push_back(proba_for(correct[i][n] ? labels[n] : (labels[n] + 1) % classes));
    ctx.query_posteriors.push_back(proba_for(query_predictions[i]));
  }
  ctx.query_predictions = query_predictions;
  return ctx;
}

/// Pool {c0, c1}; neighbors with true labels [0,1,0]; correctness rows
/// c0=[1,1,0], c1=[1,1,1]; on the query c0 predicts 0 and c1 predicts 1.
inline dynsel::CompetenceContext f1() { return context_from({0, 1, 0}, {{true, true, false}, {true, true, true}}, {0, 1}); }

/// The same answers as learners: query at x=0, neighbors at x=1,2,3.
inline std::unique_ptr<ScriptedLearner> f1_member(int which) {
  if (which == 0) return std::make_unique<ScriptedLearner>(2, std::map<double, std::size_t>{{0, 0}, {1, 0}, {2, 1}, {3, 1}});
  return std::make_unique<ScriptedLearner>(2, std::map<double, std::size_t>{{0, 1}, {1, 0}, {2, 1}, {3, 0}});
}

}  // namespace fixtures
