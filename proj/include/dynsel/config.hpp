#pragma once

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/apply.hpp"
#include "dynsel/core.hpp"
#include "dynsel/dcs.hpp"
#include "dynsel/error.hpp"
#include "dynsel/eval.hpp"
#include "dynsel/learners.hpp"

namespace dynsel {

inline constexpr std::string_view kVersion = "0.1.0";

/// One or more configuration violations, one message each.
class ConfigViolations : public ConfigError {
 public:
  explicit ConfigViolations(std::vector<std::string> violations)
      : ConfigError(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
    return out;
  }
  std::vector<std::string> violations_;
};

enum class StreamKind { sea, csv };

/// Flat string settings, keyed by long flag name.
using Settings = std::map<std::string, std::string, std::less<>>;

struct SettingSpec {
  std::string_view key;
  std::string_view fallback;  // empty: no default
  std::string_view help;
};

// clang-format off
inline constexpr SettingSpec kSettingSpecs[] = {
    {"stream", "sea", "stream source: sea or csv"},
    {"csv-path", "", "CSV file for --stream csv"},
    {"label-column", "last", "0-based label column of the CSV file, or 'last'"},
    {"header", "false", "CSV file starts with a header row (true/false)"},
    {"noise", "0", "SEA label-flip probability in [0,1]"},
    {"drift", "0:0", "SEA drift schedule start:concept[,start:concept...]; concepts 0..3 = thresholds 8,9,7,9.5"},
    {"method", "dynse", "stream method: dynse, desdd or mde"},
    {"dcs", "knora-e", "DYNSE selection rule: knora-e, knora-u, ola, lca, apriori, aposteriori, mcb, rank, knop"},
    {"learner", "ht", "base learner: nb (Gaussian naive Bayes) or ht (Hoeffding tree)"},
    {"chunk-size", "1000", "instances per chunk"},
    {"pool-size", "10", "maximum ensemble size (DYNSE, MDE)"},
    {"k", "7", "DYNSE region-of-competence size"},
    {"window", "4", "validation window in chunks (DYNSE, MDE)"},
    {"pruning", "age", "DYNSE pruning policy: age or accuracy"},
    {"sub-ensembles", "10", "DESDD sub-ensemble count"},
    {"bag-size", "5", "DESDD members per sub-ensemble"},
    {"lambda-min", "1", "DESDD smallest Poisson rate"},
    {"lambda-max", "10", "DESDD largest Poisson rate"},
    {"mde-k", "7", "MDE minority neighbors per query"},
    {"seed", "", "random seed (required)"},
    {"n", "20000", "instance budget"},
    {"out", "", "report CSV path (required); metadata goes to <out>.meta"},
    {"alpha", "0.999", "prequential fading factor in (0,1]"},
    {"eval-window", "500", "sliding accuracy window in instances"},
    {"checkpoint", "500", "report a row every this many instances"},
};
// clang-format on

/// Keys written to the metadata sidecar that are not settings; ignored when read back.
inline const std::set<std::string, std::less<>> kMetadataKeys{"version", "truncated", "instances_seen",
                                                               "first_ready_index"};

struct ExperimentConfig {
  StreamKind stream = StreamKind::sea;
  std::string csv_path;
  std::optional<std::size_t> label_column;
  bool header = false;
  double noise = 0.0;
  DriftSchedule drift;
  MethodKind method = MethodKind::dynse;
  DcsRule dcs = DcsRule::knora_e;
  LearnerKind learner = LearnerKind::hoeffding_tree;
  PruningPolicy pruning = PruningPolicy::age;
  std::size_t chunk_size = 1000;
  std::size_t pool_size = 10;
  std::size_t k = 7;
  std::size_t window = 4;
  std::size_t sub_ensembles = 10;
  std::size_t bag_size = 5;
  double lambda_min = 1.0;
  double lambda_max = 10.0;
  std::size_t mde_k = 7;
  std::uint64_t seed = 0;
  std::size_t n = 20000;
  std::string out;
  PrequentialOptions eval;

  /// The resolved settings restricted to keys that apply to this stream and method.
  Settings settings;
};

/// Which methods/streams a key applies to; empty means universal.
inline bool applies(std::string_view key, StreamKind stream, MethodKind method) {
  if (key == "csv-path" || key == "label-column" || key == "header") return stream == StreamKind::csv;
  if (key == "noise" || key == "drift") return stream == StreamKind::sea;
  if (key == "dcs" || key == "k" || key == "pruning") return method == MethodKind::dynse;
  if (key == "pool-size" || key == "window") return method != MethodKind::desdd;
  if (key == "sub-ensembles" || key == "bag-size" || key == "lambda-min" || key == "lambda-max")
    return method == MethodKind::desdd;
  if (key == "mde-k") return method == MethodKind::mde;
  return true;
}

/// Reads flat `key=value` text. Blank lines and lines starting with '#'
/// or ';' are skipped.
inline Settings parse_ini(std::istream& in, const std::string& origin) {
  Settings out;
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    ++row;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(origin + ":" + std::to_string(row) + ": expected key=value");
      continue;
    }
    out[std::string(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
  }
  if (!errors.empty()) throw ConfigViolations(std::move(errors));
  return out;
}

inline void write_ini(std::ostream& out, const Settings& s) {
  for (const auto& [k, v] : s) out << k << '=' << v << '\n';
}

namespace detail {

class Validator {
 public:
  explicit Validator(const Settings& s) : s_(s) {}

  const std::string& raw(std::string_view key) const { return s_.find(key)->second; }

  std::size_t positive(std::string_view key) {
    std::size_t v = 0;
    const auto& txt = raw(key);
    auto [p, ec] = std::from_chars(txt.data(), txt.data() + txt.size(), v);
    if (ec != std::errc{} || p != txt.data() + txt.size() || v == 0) {
      fail(key, "must be a positive integer, got '" + txt + "'");
      return 1;
    }
    return v;
  }

  std::uint64_t unsigned64(std::string_view key) {
    std::uint64_t v = 0;
    const auto& txt = raw(key);
    auto [p, ec] = std::from_chars(txt.data(), txt.data() + txt.size(), v);
    if (ec != std::errc{} || p != txt.data() + txt.size()) fail(key, "must be a nonnegative integer, got '" + txt + "'");
    return v;
  }

  double real(std::string_view key, double lo, double hi, bool lo_open) {
    auto v = parse_real(raw(key));
    if (!v || *v > hi || *v < lo || (lo_open && *v == lo)) {
      fail(key, std::string("must be a real in ") + (lo_open ? "(" : "[") + fixed6(lo) + ", " + fixed6(hi) +
                    "], got '" + raw(key) + "'");
      return lo_open ? hi : lo;
    }
    return *v;
  }

  bool boolean(std::string_view key) {
    const auto& t = raw(key);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    fail(key, "must be true or false, got '" + t + "'");
    return false;
  }

  template <class F>
  auto parsed(std::string_view key, F&& parse) -> decltype(parse(std::string_view{})) {
    try {
      return parse(raw(key));
    } catch (const ConfigError& e) {
      fail(key, e.what());
      return {};
    }
  }

  void fail(std::string_view key, const std::string& why) { errors.push_back("--" + std::string(key) + ": " + why); }

  std::vector<std::string> errors;

 private:
  const Settings& s_;
};

}  // namespace detail

/// Resolves settings (already merged: defaults < file < flags) into a typed
/// config. `explicit_keys` are keys the user set; method- or
/// stream-specific keys set for the wrong method/stream are violations.
inline ExperimentConfig resolve_config(Settings merged, const std::set<std::string, std::less<>>& explicit_keys) {
  detail::Validator v(merged);
  ExperimentConfig cfg;

  std::vector<std::string> unknown;
  for (const auto& [key, _] : merged) {
    bool known = false;
    for (const auto& spec : kSettingSpecs) known = known || spec.key == key;
    if (!known) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    v.errors.push_back("unknown config keys: " + list);
  }

  const auto& stream = v.raw("stream");
  if (stream == "sea") cfg.stream = StreamKind::sea;
  else if (stream == "csv") cfg.stream = StreamKind::csv;
  else v.fail("stream", "expected sea or csv, got '" + stream + "'");
  cfg.method = v.parsed("method", [](std::string_view s) { return parse_method(s); });

  for (const auto& key : explicit_keys)
    if (merged.count(key) && !kMetadataKeys.count(key) && !applies(key, cfg.stream, cfg.method)) {
      if (key == "dcs" || key == "k" || key == "pruning" || key == "pool-size" || key == "window" ||
          key == "sub-ensembles" || key == "bag-size" || key == "lambda-min" || key == "lambda-max" || key == "mde-k")
        v.fail(key, "not applicable to method " + std::string(to_string(cfg.method)));
      else
        v.fail(key, "not applicable to stream " + stream);
    }

  if (cfg.stream == StreamKind::csv) {
    cfg.csv_path = v.raw("csv-path");
    if (cfg.csv_path.empty()) v.fail("csv-path", "required when --stream csv");
    if (v.raw("label-column") != "last") cfg.label_column = v.unsigned64("label-column");
    cfg.header = v.boolean("header");
  } else {
    cfg.noise = v.real("noise", 0.0, 1.0, false);
    cfg.drift = v.parsed("drift", [](std::string_view s) {
      auto d = DriftSchedule::parse(s);
      SeaGenerator check(0, d);  // validates concept ids
      return d;
    });
    if (cfg.drift.segments().empty()) cfg.drift = DriftSchedule();
  }

  cfg.dcs = v.parsed("dcs", [](std::string_view s) { return parse_dcs_rule(s); });
  cfg.learner = v.parsed("learner", [](std::string_view s) { return parse_learner_kind(s); });
  cfg.pruning = v.parsed("pruning", [](std::string_view s) { return parse_pruning(s); });
  cfg.chunk_size = v.positive("chunk-size");
  cfg.pool_size = v.positive("pool-size");
  cfg.k = v.positive("k");
  cfg.window = v.positive("window");
  cfg.sub_ensembles = v.positive("sub-ensembles");
  cfg.bag_size = v.positive("bag-size");
  cfg.lambda_min = v.real("lambda-min", 0.0, 1e6, false);
  cfg.lambda_max = v.real("lambda-max", 0.0, 1e6, false);
  if (cfg.lambda_max < cfg.lambda_min) v.fail("lambda-max", "must not be smaller than --lambda-min");
  cfg.mde_k = v.positive("mde-k");
  if (v.raw("seed").empty()) v.fail("seed", "required (seeds are never derived from the clock)");
  else cfg.seed = v.unsigned64("seed");
  cfg.n = v.positive("n");
  cfg.out = v.raw("out");
  if (cfg.out.empty()) v.fail("out", "required");
  cfg.eval.alpha = v.real("alpha", 0.0, 1.0, true);
  cfg.eval.window = v.positive("eval-window");
  cfg.eval.checkpoint_every = v.positive("checkpoint");

  if (!v.errors.empty()) throw ConfigViolations(std::move(v.errors));

  for (const auto& [key, value] : merged)
    if (applies(key, cfg.stream, cfg.method)) cfg.settings[key] = value;
  return cfg;
}

/// Parses command-line arguments (without the program name). Flags
/// override values from `--config FILE`. Returns nullopt after --help,
/// with the help text in `help_out`.
inline std::optional<ExperimentConfig> parse_config(const std::vector<std::string>& args,
                                                    std::string* help_out = nullptr) {
  CLI::App app{"Prequential evaluation of dynamic classifier selection on data streams", "dynsel-run"};
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& spec : kSettingSpecs) {
    const std::string key(spec.key);
    auto* opt = app.add_option("--" + key, flag_values[key], std::string(spec.help));
    if (!spec.fallback.empty()) opt->default_str(std::string(spec.fallback));
    options[key] = opt;
  }
  std::string config_path;
  app.add_option("--config", config_path, "flat key=value file; flags override its values");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    if (help_out) *help_out = app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigViolations({e.what()});
  }

  Settings merged;
  for (const auto& spec : kSettingSpecs) merged[std::string(spec.key)] = std::string(spec.fallback);
  std::set<std::string, std::less<>> explicit_keys;

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigViolations({"--config: cannot read '" + config_path + "'"});
    for (auto& [key, value] : parse_ini(in, config_path)) {
      if (kMetadataKeys.count(key)) continue;
      merged[key] = value;
      explicit_keys.insert(key);
    }
  }
  for (const auto& [key, opt] : options) {
    if (opt->count() == 0) continue;
    merged[key] = flag_values[key];
    explicit_keys.insert(key);
  }
  return resolve_config(std::move(merged), explicit_keys);
}

}  // namespace dynsel
