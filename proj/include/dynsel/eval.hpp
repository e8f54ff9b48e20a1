#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynsel/core.hpp"
#include "dynsel/metrics.hpp"

namespace dynsel {

/// Exponentially faded hit rate.
struct FadedAccuracy {
  double correct = 0.0;
  double total = 0.0;

  void update(bool hit, double alpha) {
    correct = alpha * correct + (hit ? 1.0 : 0.0);
    total = alpha * total + 1.0;
  }
  double value() const { return total > 0.0 ? correct / total : 0.0; }
};

struct PrequentialOptions {
  double alpha = 0.999;
  std::size_t window = 500;
  std::size_t checkpoint_every = 500;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("fading factor must lie in (0,1]");
    if (window == 0) throw std::invalid_argument("evaluation window must be positive");
    if (checkpoint_every == 0) throw std::invalid_argument("checkpoint interval must be positive");
  }
};

/// Running test-then-train statistics.
class PrequentialState {
 public:
  PrequentialState(std::size_t classes, double alpha, std::size_t window)
      : confusion_(classes), alpha_(alpha), window_(window) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("fading factor must lie in (0,1]");
    if (window == 0) throw std::invalid_argument("evaluation window must be positive");
  }

  void score(ClassIndex truth, ClassIndex predicted) {
    const bool hit = truth == predicted;
    confusion_.add(truth, predicted);
    faded_.update(hit, alpha_);
    recent_.emplace_back(truth, predicted);
    window_hits_ += hit;
    if (recent_.size() > window_) {
      window_hits_ -= recent_.front().first == recent_.front().second;
      recent_.pop_front();
    }
  }

  std::uint64_t scored() const { return confusion_.total(); }
  const ConfusionMatrix& confusion() const { return confusion_; }
  const FadedAccuracy& faded() const { return faded_; }
  const std::deque<std::pair<ClassIndex, ClassIndex>>& recent() const { return recent_; }

  double accuracy() const { return confusion_.accuracy(); }
  double faded_accuracy() const { return faded_.value(); }
  double window_accuracy() const {
    return recent_.empty() ? 0.0 : static_cast<double>(window_hits_) / static_cast<double>(recent_.size());
  }
  double kappa() const { return dynsel::kappa(confusion_); }
  double gmean() const { return dynsel::gmean(confusion_); }

 private:
  ConfusionMatrix confusion_;
  FadedAccuracy faded_;
  double alpha_;
  std::size_t window_;
  std::deque<std::pair<ClassIndex, ClassIndex>> recent_;
  std::size_t window_hits_ = 0;
};

struct ReportRow {
  std::size_t index = 0;
  double accuracy = 0.0;
  double faded_accuracy = 0.0;
  double window_accuracy = 0.0;
  double kappa = 0.0;
  double gmean = 0.0;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  std::size_t instances_seen = 0;
  /// 1-based index of the first instance predicted while the model was ready.
  std::optional<std::size_t> first_ready_index;
  bool truncated = false;
};

inline constexpr const char* kReportHeader = "index,accuracy,faded_accuracy,window_accuracy,kappa,gmean";

namespace detail {
inline std::string fixed6(double v) {
  if (std::fabs(v) < 5e-7) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace detail

inline void write_report_csv(std::ostream& out, const EvaluationReport& report) {
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.index << ',' << detail::fixed6(r.accuracy) << ',' << detail::fixed6(r.faded_accuracy) << ','
        << detail::fixed6(r.window_accuracy) << ',' << detail::fixed6(r.kappa) << ',' << detail::fixed6(r.gmean)
        << '\n';
  }
}

template <class Model>
concept PrequentialModel = requires(Model& m, const Model& cm, std::span<const double> x, std::span<const Instance> b) {
  { cm.predict(x) } -> std::convertible_to<ClassIndex>;
  m.partial_fit(b);
};

/// Interleaved test-then-train over at most `n` instances: each instance is
/// predicted and scored before the model sees its label.
template <PrequentialModel Model>
EvaluationReport prequential_run(StreamSource& stream, Model& model, std::size_t n, PrequentialOptions opts = {}) {
  if (n == 0) throw std::invalid_argument("instance budget must be positive");
  opts.validate();
  PrequentialState state(stream.class_count(), opts.alpha, opts.window);
  EvaluationReport report;
  auto checkpoint = [&] {
    report.rows.push_back(ReportRow{report.instances_seen, state.accuracy(), state.faded_accuracy(),
                                    state.window_accuracy(), state.kappa(), state.gmean()});
  };
  while (report.instances_seen < n) {
    auto inst = stream.next();
    if (!inst) {
      report.truncated = true;
      break;
    }
    if (!inst->label) throw std::invalid_argument("prequential evaluation needs labeled instances");
    if constexpr (requires { model.ready(); }) {
      if (!report.first_ready_index && model.ready()) report.first_ready_index = report.instances_seen + 1;
    }
    const ClassIndex predicted = model.predict(inst->features);
    state.score(*inst->label, predicted);
    ++report.instances_seen;
    model.partial_fit(std::span<const Instance>(&*inst, 1));
    if (report.instances_seen % opts.checkpoint_every == 0) checkpoint();
  }
  if (report.instances_seen > 0 && (report.rows.empty() || report.rows.back().index != report.instances_seen))
    checkpoint();
  return report;
}

}  // namespace dynsel
