#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "dynsel/core.hpp"

namespace dynsel {

/// C x C counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), cells_(classes * classes, 0) {}
  ConfusionMatrix(std::initializer_list<std::initializer_list<std::uint64_t>> rows) : ConfusionMatrix(rows.size()) {
    std::size_t r = 0;
    for (const auto& row : rows) {
      if (row.size() != classes_) throw std::invalid_argument("confusion matrix must be square");
      std::size_t c = 0;
      for (auto v : row) {
        at(r, c++) = v;
        total_ += v;
      }
      ++r;
    }
  }

  void add(ClassIndex truth, ClassIndex predicted) {
    if (truth >= classes_ || predicted >= classes_) throw std::out_of_range("class index outside confusion matrix");
    ++at(truth, predicted);
    ++total_;
  }

  std::size_t classes() const { return classes_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const { return cells_[truth * classes_ + predicted]; }

  std::uint64_t row_sum(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += (*this)(truth, c);
    return s;
  }
  std::uint64_t col_sum(std::size_t predicted) const {
    std::uint64_t s = 0;
    for (std::size_t r = 0; r < classes_; ++r) s += (*this)(r, predicted);
    return s;
  }
  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += (*this)(c, c);
    return s;
  }

  double accuracy() const { return total_ == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(total_); }

 private:
  std::uint64_t& at(std::size_t r, std::size_t c) { return cells_[r * classes_ + c]; }

  std::size_t classes_;
  std::vector<std::uint64_t> cells_;
  std::uint64_t total_ = 0;
};

/// Cohen's kappa; 0 when chance agreement is total. Evaluated as
/// (n*trace - S) / (n^2 - S) with S = sum of row*column marginals, which is
/// exact in double for counts below 2^26.
inline double kappa(const ConfusionMatrix& m) {
  if (m.total() == 0) throw std::invalid_argument("kappa of an empty confusion matrix");
  const double n = static_cast<double>(m.total());
  double chance = 0.0;
  for (std::size_t c = 0; c < m.classes(); ++c)
    chance += static_cast<double>(m.row_sum(c)) * static_cast<double>(m.col_sum(c));
  const double denom = n * n - chance;
  if (denom == 0.0) return 0.0;
  return (n * static_cast<double>(m.trace()) - chance) / denom;
}

/// Geometric mean of per-class recalls over classes that actually occur.
inline double gmean(const ConfusionMatrix& m) {
  double log_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    const auto support = m.row_sum(c);
    if (support == 0) continue;
    const double recall = static_cast<double>(m(c, c)) / static_cast<double>(support);
    if (recall == 0.0) return 0.0;
    log_sum += std::log(recall);
    ++present;
  }
  if (present == 0) return 0.0;
  return std::exp(log_sum / static_cast<double>(present));
}

/// Geometric mean of an explicit recall vector.
inline double gmean_of_recalls(const std::vector<double>& recalls) {
  if (recalls.empty()) return 0.0;
  double log_sum = 0.0;
  for (double r : recalls) {
    if (r <= 0.0) return 0.0;
    log_sum += std::log(r);
  }
  return std::exp(log_sum / static_cast<double>(recalls.size()));
}

}  // namespace dynsel
