#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dynsel/error.hpp"

namespace dynsel {

using ClassIndex = std::size_t;

/// A dense feature vector with an optional class label.
struct Instance {
  std::vector<double> features;
  std::optional<ClassIndex> label;

  Instance() = default;
  explicit Instance(std::vector<double> x, std::optional<ClassIndex> y = std::nullopt)
      : features(std::move(x)), label(y) {}

  std::size_t dimension() const { return features.size(); }
  bool labeled() const { return label.has_value(); }

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Fixed-capacity ordered batch of labeled instances.
class Chunk {
 public:
  explicit Chunk(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("chunk capacity must be positive");
    items_.reserve(capacity);
  }

  void push(Instance inst) {
    if (!inst.labeled()) throw std::invalid_argument("chunk items must be labeled");
    if (full()) throw std::length_error("chunk is full");
    items_.push_back(std::move(inst));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool full() const { return items_.size() == capacity_; }
  void clear() { items_.clear(); }

  const Instance& operator[](std::size_t i) const { return items_[i]; }
  std::span<const Instance> items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::vector<Instance> items_;
};

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Seeded generator with portable uniform and Poisson draws. The standard
/// distributions are implementation-defined, so reports would differ across
/// standard libraries; these are specified bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Knuth's multiplication method; adequate for the small rates used by online bagging.
  unsigned poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    unsigned k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Derives independent child seeds from a master seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

/// Single-consumer source of labeled instances.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  /// Next instance, or nullopt once exhausted.
  virtual std::optional<Instance> next() = 0;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t feature_count() const = 0;
};

/// Ordered (start_index, concept_id) segments. The first segment starts at 0.
class DriftSchedule {
 public:
  struct Segment {
    std::size_t start_index;
    int concept_id;
    friend bool operator==(const Segment&, const Segment&) = default;
  };

  DriftSchedule() : segments_{{0, 0}} {}
  explicit DriftSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw ConfigError("drift schedule must have at least one segment");
    if (segments_.front().start_index != 0) throw ConfigError("drift schedule must start at index 0");
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      if (segments_[i].start_index <= segments_[i - 1].start_index)
        throw ConfigError("drift schedule start indices must be strictly increasing");
    }
  }

  /// Single concept for the whole stream.
  static DriftSchedule constant(int concept_id) { return DriftSchedule({{0, concept_id}}); }

  /// Parses "start:concept,start:concept,...", e.g. "0:0,10000:3".
  static DriftSchedule parse(std::string_view text) {
    std::vector<Segment> segs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      auto item = text.substr(pos, comma - pos);
      auto colon = item.find(':');
      if (colon == std::string_view::npos) throw ConfigError("drift segment '" + std::string(item) + "' is not start:concept");
      std::size_t start = 0;
      int concept_id = 0;
      auto s = item.substr(0, colon);
      auto c = item.substr(colon + 1);
      auto r1 = std::from_chars(s.data(), s.data() + s.size(), start);
      auto r2 = std::from_chars(c.data(), c.data() + c.size(), concept_id);
      if (r1.ec != std::errc{} || r1.ptr != s.data() + s.size() || r2.ec != std::errc{} ||
          r2.ptr != c.data() + c.size())
        throw ConfigError("drift segment '" + std::string(item) + "' is not start:concept");
      segs.push_back({start, concept_id});
      pos = comma + 1;
    }
    return DriftSchedule(std::move(segs));
  }

  std::string to_string() const {
    std::string out;
    for (const auto& seg : segments_) {
      if (!out.empty()) out += ',';
      out += std::to_string(seg.start_index) + ':' + std::to_string(seg.concept_id);
    }
    return out;
  }

  /// Concept active at instance index i (0-based): the last segment with start <= i.
  int concept_at(std::size_t i) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), i,
                               [](std::size_t v, const Segment& s) { return v < s.start_index; });
    return std::prev(it)->concept_id;
  }

  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

/// SEA concepts: three features in [0,10), label 1 iff f1 + f2 <= threshold.
class SeaGenerator final : public StreamSource {
 public:
  static constexpr std::array<double, 4> kThresholds{8.0, 9.0, 7.0, 9.5};

  SeaGenerator(std::uint64_t seed, DriftSchedule schedule = {}, double noise_rate = 0.0)
      : rng_(seed), schedule_(std::move(schedule)), noise_(noise_rate) {
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("SEA noise rate must lie in [0,1]");
    for (const auto& seg : schedule_.segments()) {
      if (seg.concept_id < 0 || seg.concept_id >= static_cast<int>(kThresholds.size()))
        throw ConfigError("SEA concept id " + std::to_string(seg.concept_id) + " out of range [0,3]");
    }
  }

  static double threshold(int concept_id) { return kThresholds.at(static_cast<std::size_t>(concept_id)); }

  /// Noise-free labeling rule.
  static ClassIndex label_for(std::span<const double> x, double theta) { return x[0] + x[1] <= theta ? 1 : 0; }

  std::optional<Instance> next() override {
    std::vector<double> x(3);
    for (auto& v : x) v = rng_.uniform(0.0, 10.0);
    const double theta = threshold(schedule_.concept_at(index_));
    ClassIndex y = label_for(x, theta);
    // The noise draw happens only when noise is enabled so noise-free
    // sequences do not depend on the noise code path.
    if (noise_ > 0.0 && rng_.bernoulli(noise_)) y = 1 - y;
    ++index_;
    return Instance(std::move(x), y);
  }

  std::size_t class_count() const override { return 2; }
  std::size_t feature_count() const override { return 3; }
  std::size_t position() const { return index_; }
  const DriftSchedule& schedule() const { return schedule_; }

 private:
  Rng rng_;
  DriftSchedule schedule_;
  double noise_;
  std::size_t index_ = 0;
};

/// Finite in-memory stream; also the result of CSV ingestion.
class VectorStream final : public StreamSource {
 public:
  VectorStream(std::vector<Instance> data, std::size_t classes, std::vector<std::string> class_names = {})
      : data_(std::move(data)), classes_(classes), names_(std::move(class_names)) {}

  std::optional<Instance> next() override {
    if (pos_ >= data_.size()) return std::nullopt;
    return data_[pos_++];
  }
  std::size_t class_count() const override { return classes_; }
  std::size_t feature_count() const override { return data_.empty() ? 0 : data_.front().dimension(); }

  const std::vector<Instance>& instances() const { return data_; }
  /// Original label text per dense class index.
  const std::vector<std::string>& class_names() const { return names_; }

 private:
  std::vector<Instance> data_;
  std::size_t classes_;
  std::vector<std::string> names_;
  std::size_t pos_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(pos)));
      return cells;
    }
    cells.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
}

inline std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses CSV text. `label_column` is 0-based; nullopt selects the last column.
/// Labels map to dense class indices in order of first appearance. Rows and
/// columns in error messages are 1-based file positions.
inline VectorStream parse_csv_stream(std::istream& in, std::optional<std::size_t> label_column, bool header) {
  std::vector<Instance> data;
  std::map<std::string, ClassIndex, std::less<>> class_ids;
  std::vector<std::string> names;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t row = 0;
  bool skipped_header = !header;

  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    auto cells = detail::split_commas(line);
    if (!width) {
      width = cells.size();
      if (*width < 2) throw ParseError("row " + std::to_string(row) + ": need at least one feature and a label");
      if (label_column && *label_column >= *width)
        throw ParseError("label column " + std::to_string(*label_column + 1) + " exceeds row width " +
                         std::to_string(*width));
    } else if (cells.size() != *width) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(*width) + " columns, found " +
                       std::to_string(cells.size()));
    }
    const std::size_t label_at = label_column.value_or(*width - 1);
    std::vector<double> x;
    x.reserve(*width - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_at) continue;
      auto v = detail::parse_real(cells[c]);
      if (!v)
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(c + 1) + ": cannot parse '" +
                         std::string(cells[c]) + "' as a real number");
      x.push_back(*v);
    }
    std::string label(cells[label_at]);
    if (label.empty()) throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(label_at + 1) + ": empty label");
    auto it = class_ids.find(label);
    if (it == class_ids.end()) {
      it = class_ids.emplace(label, names.size()).first;
      names.push_back(label);
    }
    data.emplace_back(std::move(x), it->second);
  }
  if (data.empty()) throw ParseError("CSV stream contains no data rows");
  const std::size_t classes = names.size();
  return VectorStream(std::move(data), classes, std::move(names));
}

inline std::unique_ptr<VectorStream> read_csv_stream(const std::string& path, std::optional<std::size_t> label_column,
                                                     bool header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file '" + path + "'");
  return std::make_unique<VectorStream>(parse_csv_stream(in, label_column, header));
}

}  // namespace dynsel
