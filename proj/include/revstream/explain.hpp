#pragma once

// Explanation payloads: decision paths over exported trees, path-frequency relevance,
// per-user quartile severity and a short natural-language description.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "revstream/drift.hpp"
#include "revstream/learners.hpp"
#include "revstream/log.hpp"
#include "revstream/profiles.hpp"
#include "revstream/select.hpp"
#include "revstream/types.hpp"

namespace revstream::explain {

using nlohmann::json;

enum class Direction { greater, less_equal };

inline const char* to_string(Direction d) { return d == Direction::greater ? "greater" : "less_equal"; }

inline Direction parse_direction(const std::string& s) {
  if (s == "greater") return Direction::greater;
  if (s == "less_equal") return Direction::less_equal;
  throw InvalidArgument("unknown direction '" + s + "'");
}

struct Step {
  std::string feature;
  double threshold = 0.0;
  double value = 0.0;
  Direction direction = Direction::less_equal;
  int node_id = 0;
  bool operator==(const Step&) const = default;
};

struct DecisionPath {
  std::size_t tree_id = 0;
  std::vector<Step> steps;
  int leaf_id = 0;
  ClassArray leaf_counts{0.0, 0.0};
  bool operator==(const DecisionPath&) const = default;
};

/// Walks an exported tree ({"root", "nodes"}) from the root to a leaf.
/// Missing features read as 0.
inline DecisionPath trace_path(const json& tree, const FeatureVector& fv, std::size_t tree_id = 0) {
  std::map<int, const json*> nodes;
  for (const auto& n : tree.at("nodes")) nodes[n.at("id").get<int>()] = &n;
  DecisionPath path;
  path.tree_id = tree_id;
  int id = tree.at("root").get<int>();
  for (std::size_t guard = 0; guard <= nodes.size(); ++guard) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw InvalidArgument("trace_path: dangling node id " + std::to_string(id));
    const json& n = *it->second;
    if (n.at("leaf").get<bool>()) {
      path.leaf_id = id;
      const auto& c = n.at("counts");
      path.leaf_counts = {c.at(0).get<double>(), c.at(1).get<double>()};
      return path;
    }
    Step s;
    s.node_id = id;
    s.feature = n.at("feature").get<std::string>();
    s.threshold = n.at("threshold").get<double>();
    auto f = fv.find(s.feature);
    if (f == fv.end()) log::debug("trace_path: feature '" + s.feature + "' missing, read as 0");
    s.value = f == fv.end() ? 0.0 : f->second;
    s.direction = s.value > s.threshold ? Direction::greater : Direction::less_equal;
    id = (s.direction == Direction::greater ? n.at("right") : n.at("left")).get<int>();
    path.steps.push_back(std::move(s));
  }
  throw InvalidArgument("trace_path: cycle in exported tree");
}

/// Re-walks `path` on `tree` with `fv`; true when every recorded step is taken again
/// and the walk ends at the recorded leaf.
inline bool replays(const json& tree, const DecisionPath& path, const FeatureVector& fv) {
  return trace_path(tree, fv, path.tree_id) == path;
}

struct Relevance {
  std::string feature;
  std::size_t count = 0;
  bool operator==(const Relevance&) const = default;
};

/// Counts `greater` steps per feature over all paths, keeps counts >= min_frequency,
/// sorted by count descending then key ascending.
inline std::vector<Relevance> feature_relevance(const std::vector<DecisionPath>& paths,
                                                std::size_t min_frequency = 1) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : paths)
    for (const auto& s : p.steps)
      if (s.direction == Direction::greater) ++counts[s.feature];
  std::vector<Relevance> out;
  for (const auto& [k, c] : counts)
    if (c >= std::max<std::size_t>(min_frequency, 1)) out.push_back({k, c});
  std::stable_sort(out.begin(), out.end(),
                   [](const Relevance& a, const Relevance& b) { return a.count > b.count; });
  return out;
}

/// Linear-interpolation quantile over sorted data, position (n - 1) q.
inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

enum class Severity { green, yellow, red, unknown };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::green: return "green";
    case Severity::yellow: return "yellow";
    case Severity::red: return "red";
    case Severity::unknown: return "unknown";
  }
  return "?";
}

inline Severity parse_severity(const std::string& s) {
  for (auto v : {Severity::green, Severity::yellow, Severity::red, Severity::unknown})
    if (s == to_string(v)) return v;
  throw InvalidArgument("unknown severity '" + s + "'");
}

inline constexpr std::size_t kMinSeverityHistory = 4;

/// green above the median, red below the first quartile, yellow in between (both
/// boundaries yellow); unknown with fewer than four observations.
template <typename Range>
Severity severity(double value, const Range& history) {
  std::vector<double> sorted(std::begin(history), std::end(history));
  if (sorted.size() < kMinSeverityHistory) return Severity::unknown;
  std::sort(sorted.begin(), sorted.end());
  const double q25 = quantile(sorted, 0.25), q50 = quantile(sorted, 0.50);
  if (value > q50) return Severity::green;
  if (value < q25) return Severity::red;
  return Severity::yellow;
}

struct RelevantFeature {
  std::string feature;
  std::size_t count = 0;
  double value = 0.0;
  Severity severity = Severity::unknown;
  bool operator==(const RelevantFeature&) const = default;
};

enum class DescriptionSource { template_engine, external, fallback };

inline const char* to_string(DescriptionSource s) {
  switch (s) {
    case DescriptionSource::template_engine: return "template";
    case DescriptionSource::external: return "external";
    case DescriptionSource::fallback: return "fallback";
  }
  return "?";
}

inline DescriptionSource parse_description_source(const std::string& s) {
  if (s == "template") return DescriptionSource::template_engine;
  if (s == "external") return DescriptionSource::external;
  if (s == "fallback") return DescriptionSource::fallback;
  throw InvalidArgument("unknown description source '" + s + "'");
}

struct ExplanationPayload {
  std::string event_id;
  Label label = Label::nonspam;
  double confidence = 0.5;
  ClassArray proba{0.5, 0.5};
  std::vector<RelevantFeature> features;
  std::vector<DecisionPath> paths;
  std::string description;
  DescriptionSource description_source = DescriptionSource::template_engine;
  std::string description_error;  // set when an external generator failed
  std::optional<drift::DriftReport> drift;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const Step& s) {
  j = json{{"feature", s.feature}, {"threshold", s.threshold}, {"value", s.value},
           {"direction", to_string(s.direction)}, {"node_id", s.node_id}};
}

inline void from_json(const json& j, Step& s) {
  s.feature = j.at("feature").get<std::string>();
  s.threshold = j.at("threshold").get<double>();
  s.value = j.at("value").get<double>();
  s.direction = parse_direction(j.at("direction").get<std::string>());
  s.node_id = j.at("node_id").get<int>();
}

inline void to_json(json& j, const DecisionPath& p) {
  j = json{{"tree_id", p.tree_id}, {"steps", p.steps}, {"leaf_id", p.leaf_id},
           {"leaf_counts", p.leaf_counts}};
}

inline void from_json(const json& j, DecisionPath& p) {
  p.tree_id = j.at("tree_id").get<std::size_t>();
  p.steps = j.at("steps").get<std::vector<Step>>();
  p.leaf_id = j.at("leaf_id").get<int>();
  p.leaf_counts = j.at("leaf_counts").get<ClassArray>();
}

inline void to_json(json& j, const RelevantFeature& f) {
  j = json{{"feature", f.feature}, {"count", f.count}, {"value", f.value},
           {"severity", to_string(f.severity)}};
}

inline void from_json(const json& j, RelevantFeature& f) {
  f.feature = j.at("feature").get<std::string>();
  f.count = j.at("count").get<std::size_t>();
  f.value = j.at("value").get<double>();
  f.severity = parse_severity(j.at("severity").get<std::string>());
}

inline void to_json(json& j, const ExplanationPayload& p) {
  j = json{{"event_id", p.event_id},
           {"prediction", {{"label", to_string(p.label)}, {"confidence", p.confidence},
                           {"proba", {{"nonspam", p.proba[0]}, {"spam", p.proba[1]}}}}},
           {"features", p.features},
           {"paths", p.paths},
           {"description", p.description},
           {"description_source", to_string(p.description_source)},
           {"description_error", p.description_error},
           {"drift", p.drift ? json(*p.drift) : json(nullptr)}};
}

inline void from_json(const json& j, ExplanationPayload& p) {
  p.event_id = j.at("event_id").get<std::string>();
  const auto& pred = j.at("prediction");
  auto label = parse_label(pred.at("label").get<std::string>());
  if (!label) throw InvalidArgument("payload: bad label");
  p.label = *label;
  p.confidence = pred.at("confidence").get<double>();
  p.proba = {pred.at("proba").at("nonspam").get<double>(), pred.at("proba").at("spam").get<double>()};
  p.features = j.at("features").get<std::vector<RelevantFeature>>();
  p.paths = j.at("paths").get<std::vector<DecisionPath>>();
  p.description = j.at("description").get<std::string>();
  p.description_source = parse_description_source(j.at("description_source").get<std::string>());
  p.description_error = j.value("description_error", std::string());
  if (j.contains("drift") && !j.at("drift").is_null())
    p.drift = j.at("drift").get<drift::DriftReport>();
  else
    p.drift.reset();
}

// ---------------------------------------------------------------------------
// Descriptions

/// Human-readable name of a feature key.
inline std::string display_name(std::string_view key) {
  std::string s;
  if (select::is_wordgram_key(key)) return "the word-gram '" + std::string(key.substr(select::kWordGramPrefix.size())) + "'";
  if (key.starts_with("emotion_")) key.remove_prefix(8);
  for (char c : key) s += c == '_' ? ' ' : c;
  return s;
}

inline std::string percent(double p) {
  return std::to_string(static_cast<long>(std::lround(p * 100.0))) + "%";
}

/// Deterministic template text.
inline std::string template_description(const ExplanationPayload& p, std::size_t top_k = 3) {
  const bool any_step = std::any_of(p.paths.begin(), p.paths.end(),
                                    [](const DecisionPath& d) { return !d.steps.empty(); });
  if (!any_step) return "No informative split; prediction from class prior.";
  std::string text = "Classified as " + std::string(to_string(p.label)) + " with " +
                     percent(p.confidence) + " confidence";
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < p.features.size() && i < top_k; ++i)
    parts.push_back("high " + display_name(p.features[i].feature));
  if (parts.empty()) {
    // no greater-than split on any path: name the low values instead
    for (const auto& d : p.paths)
      for (const auto& s : d.steps) {
        auto name = "low " + display_name(s.feature);
        if (parts.size() < top_k && std::find(parts.begin(), parts.end(), name) == parts.end())
          parts.push_back(name);
      }
  }
  text += "; driven by ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) text += i + 1 == parts.size() ? " and " : ", ";
    text += parts[i];
  }
  text += ".";
  const auto flagged = std::count_if(p.features.begin(), p.features.end(), [](const RelevantFeature& f) {
    return f.severity == Severity::red;
  });
  if (flagged > 0)
    text += " " + std::to_string(flagged) + " relevant feature" + (flagged == 1 ? " is" : "s are") +
            " below this user's first quartile.";
  if (p.drift && p.drift->drift)
    text += " Drift was detected at sample " + std::to_string(p.drift->sample_index) +
            " and the model was retrained.";
  return text;
}

inline constexpr double kTemperature = 0.7;

inline constexpr std::string_view kPromptInstruction =
    "Explain in two sentences, for a review moderator, why this review received the "
    "prediction below. Use the decision path and the relevant features.";

/// Prompt sent to an external generator: instruction line, then one JSON document.
inline std::string build_prompt(const ExplanationPayload& p) {
  json body{{"prediction", {{"label", to_string(p.label)}, {"confidence", p.confidence}}},
            {"top_features", p.features},
            {"paths", p.paths},
            {"temperature", kTemperature}};
  return std::string(kPromptInstruction) + "\n" + body.dump();
}

/// External text generator: prompt in, text out. Implementations throw on failure.
class DescriptionGenerator {
 public:
  virtual ~DescriptionGenerator() = default;
  virtual std::string generate(const std::string& prompt) = 0;
};

/// Test double: returns a fixed reply or throws, and records prompts.
class MockGenerator : public DescriptionGenerator {
 public:
  explicit MockGenerator(std::string reply, bool fail = false)
      : reply_(std::move(reply)), fail_(fail) {}
  std::string generate(const std::string& prompt) override {
    prompts.push_back(prompt);
    if (fail_) throw std::runtime_error("mock generator failure");
    return reply_;
  }
  std::vector<std::string> prompts;

 private:
  std::string reply_;
  bool fail_;
};

/// Fills description fields; generator failures fall back to the template.
inline void describe(ExplanationPayload& p, DescriptionGenerator* generator = nullptr) {
  p.description_error.clear();
  if (!generator) {
    p.description = template_description(p);
    p.description_source = DescriptionSource::template_engine;
    return;
  }
  try {
    p.description = generator->generate(build_prompt(p));
    p.description_source = DescriptionSource::external;
  } catch (const std::exception& e) {
    log::warn(std::string("describe: external generator failed: ") + e.what());
    p.description = template_description(p);
    p.description_source = DescriptionSource::fallback;
    p.description_error = e.what();
  }
}

// ---------------------------------------------------------------------------
// Assembly

struct ExplainOptions {
  std::size_t min_frequency = 1;
  DescriptionGenerator* generator = nullptr;
};

/// Builds a payload from paths already traced on the predicting model; `fv` is the exact
/// model input.
inline ExplanationPayload assemble(const std::string& event_id, const Prediction& prediction,
                                   std::vector<DecisionPath> paths, const FeatureVector& fv,
                                   const profiles::UserProfile* user,
                                   std::optional<drift::DriftReport> drift_report,
                                   const ExplainOptions& opts = {}) {
  ExplanationPayload p;
  p.event_id = event_id;
  p.label = prediction.label;
  p.proba = prediction.proba;
  p.confidence = prediction.confidence();
  p.paths = std::move(paths);
  static const std::deque<double> no_history;
  for (const auto& r : feature_relevance(p.paths, opts.min_frequency)) {
    auto v = fv.find(r.feature);
    const double value = v == fv.end() ? 0.0 : v->second;
    const std::deque<double>* h = &no_history;
    if (user) {
      auto it = user->history.find(r.feature);
      if (it != user->history.end()) h = &it->second;
    }
    p.features.push_back({r.feature, r.count, value, severity(value, *h)});
  }
  p.drift = std::move(drift_report);
  describe(p, opts.generator);
  return p;
}

/// `trees` is the "trees" array of an exported model.
inline ExplanationPayload explain(const std::string& event_id, const Prediction& prediction,
                                  const json& trees, const FeatureVector& fv,
                                  const profiles::UserProfile* user,
                                  std::optional<drift::DriftReport> drift_report,
                                  const ExplainOptions& opts = {}) {
  std::vector<DecisionPath> paths;
  for (std::size_t i = 0; i < trees.size(); ++i) paths.push_back(trace_path(trees.at(i), fv, i));
  return assemble(event_id, prediction, std::move(paths), fv, user, std::move(drift_report), opts);
}

inline ExplanationPayload explain(const std::string& event_id, const learners::OnlineModel& model,
                                  const FeatureVector& fv, const profiles::UserProfile* user = nullptr,
                                  std::optional<drift::DriftReport> drift_report = std::nullopt,
                                  const ExplainOptions& opts = {}) {
  return explain(event_id, model.predict_proba_one(fv), model.export_trees().at("trees"), fv, user,
                 std::move(drift_report), opts);
}

}  // namespace revstream::explain
