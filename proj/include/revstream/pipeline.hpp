#pragma once

// One prequential processing chain: features, profiles, selection, model, drift handling.

#include <chrono>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "revstream/detectors.hpp"
#include "revstream/drift.hpp"
#include "revstream/learners.hpp"
#include "revstream/metrics.hpp"
#include "revstream/profiles.hpp"
#include "revstream/select.hpp"
#include "revstream/textfeat.hpp"

namespace revstream::eval {

enum class DetectorKind { none, proposed, eddm, adwin };

inline const char* to_string(DetectorKind d) {
  switch (d) {
    case DetectorKind::none: return "none";
    case DetectorKind::proposed: return "proposed";
    case DetectorKind::eddm: return "eddm";
    case DetectorKind::adwin: return "adwin";
  }
  return "?";
}

inline DetectorKind parse_detector(const std::string& s) {
  if (s == "none") return DetectorKind::none;
  if (s == "proposed") return DetectorKind::proposed;
  if (s == "eddm") return DetectorKind::eddm;
  if (s == "adwin") return DetectorKind::adwin;
  throw InvalidArgument("unknown detector '" + s + "'");
}

struct PipelineConfig {
  textfeat::DatasetProfile profile = textfeat::DatasetProfile::yelp;
  learners::ModelKind model = learners::ModelKind::htc;
  learners::Hyperparameters hyperparameters;
  DetectorKind detector = DetectorKind::none;
  drift::WindowConfig window;
  std::size_t reselect_every = 500;
  double variance_threshold = 0.0;
  std::size_t baseline_retrain_window = 500;  // EDDM / ADWIN retraining set
  bool track_history = false;
  bool record_paths = false;  // fill StepResult::paths
};

/// Full (unselected) features and label, kept for retraining.
struct StoredSample {
  FeatureVector features;
  Label label = Label::nonspam;
};

/// Root-to-leaf walk of one tree, taken before the model learned from the sample.
struct TreePath {
  std::vector<learners::PathStep> steps;
  int leaf_id = 0;
  ClassArray leaf_counts{0.0, 0.0};
};

struct StepResult {
  std::uint64_t index = 0;
  Prediction prediction;
  FeatureVector input;            // what the model saw
  WordGramRow wordgrams;
  std::optional<Label> actual;
  std::optional<drift::DriftReport> report;  // proposed detector only
  drift::DetectorState baseline_state = drift::DetectorState::normal;
  bool retrained = false;
  std::vector<TreePath> paths;
  double seconds = 0.0;
};

inline std::string wordgram_key(const std::string& gram) {
  return std::string(select::kWordGramPrefix) + gram;
}

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg = {})
      : cfg_(cfg),
        vocab_(textfeat::VocabConfig::for_profile(cfg.profile)),
        profiles_({.track_history = cfg.track_history}),
        model_(cfg.model, cfg.hyperparameters),
        window_(cfg.window) {}

  /// Test-then-train on one event. Events without a label are predicted only.
  StepResult step(const RawEvent& ev) {
    const auto t0 = std::chrono::steady_clock::now();
    StepResult r;
    r.index = seen_++;
    const auto content = textfeat::extract_content_features(ev, {.profile = cfg_.profile});
    r.wordgrams = vocab_.build_wordgrams(ev.text);
    FeatureVector full = profiles_.enrich(ev, content);
    variance_.observe(full);
    for (const auto& [g, c] : r.wordgrams) full.emplace(wordgram_key(g), c);
    r.input = selection_ready_ ? select::apply_selection(full, selected_) : full;
    r.prediction = model_.predict_proba_one(r.input);
    if (cfg_.record_paths) {
      for (std::size_t t = 0; t < model_.tree_count(); ++t) {
        TreePath tp;
        tp.steps = model_.tree(t).decision_path(r.input, &tp.leaf_id);
        tp.leaf_counts = model_.tree(t).leaf_for(r.input).counts;
        r.paths.push_back(std::move(tp));
      }
    }
    r.actual = ev.label;
    if (ev.label) {
      const Label y = *ev.label;
      confusion_.add(y, r.prediction.label);
      const bool error = r.prediction.label != y;
      bool retrain = false;
      switch (cfg_.detector) {
        case DetectorKind::none: break;
        case DetectorKind::proposed:
          r.report = window_.observe(r.wordgrams, y, r.prediction.label, StoredSample{full, y});
          retrain = r.report->drift;
          break;
        case DetectorKind::eddm:
          r.baseline_state = eddm_.observe(error);
          retrain = r.baseline_state == drift::DetectorState::drift;
          break;
        case DetectorKind::adwin:
          r.baseline_state = adwin_.observe(error ? 0.0 : 1.0);
          retrain = r.baseline_state == drift::DetectorState::drift;
          break;
      }
      if (cfg_.detector == DetectorKind::eddm || cfg_.detector == DetectorKind::adwin) {
        recent_.push_back({full, y});
        if (recent_.size() > cfg_.baseline_retrain_window) recent_.pop_front();
      }
      if (retrain) {
        ++drifts_;
        reselect();
        // the current sample is already part of the retraining set
        if (cfg_.detector == DetectorKind::proposed) {
          std::vector<const StoredSample*> set;
          for (const auto& e : window_.current_window()) set.push_back(&e.payload);
          r.retrained = retrain_on(set);
        } else {
          std::vector<const StoredSample*> set;
          for (const auto& s : recent_) set.push_back(&s);
          r.retrained = retrain_on(set);
        }
      }
      if (!r.retrained) model_.learn_one(r.input, y);
      profiles_.record_label(ev.user_id, y);
      ++labeled_;
    }
    if (cfg_.reselect_every > 0 && seen_ % cfg_.reselect_every == 0) reselect();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    seconds_ += r.seconds;
    return r;
  }

  const PipelineConfig& config() const noexcept { return cfg_; }
  const Confusion& confusion() const noexcept { return confusion_; }
  MetricsSummary metrics() const { return summarize(confusion_); }
  const learners::OnlineModel& model() const noexcept { return model_; }
  const learners::Hyperparameters& hyperparameters() const noexcept {
    return model_.hyperparameters();
  }
  const profiles::ProfileGraph& profiles() const noexcept { return profiles_; }
  profiles::ProfileGraph& profiles() noexcept { return profiles_; }
  const drift::WindowDetector<StoredSample>& window() const noexcept { return window_; }
  const std::set<std::string>& selected_features() const noexcept { return selected_; }
  bool selection_ready() const noexcept { return selection_ready_; }
  std::uint64_t drifts() const noexcept { return drifts_; }
  std::uint64_t samples() const noexcept { return seen_; }
  std::uint64_t labeled() const noexcept { return labeled_; }
  double seconds() const noexcept { return seconds_; }

 private:
  void reselect() {
    selected_ = variance_.selected(cfg_.variance_threshold);
    selection_ready_ = true;
  }

  bool retrain_on(const std::vector<const StoredSample*>& set) {
    auto grid = learners::default_grid(cfg_.model, model_.hyperparameters());
    auto res = learners::grid_search_stream(
        cfg_.model, set, grid, [&](const StoredSample* s) {
          return learners::LabeledSample{select::apply_selection(s->features, selected_), s->label};
        });
    if (!res) return false;
    model_ = std::move(res->model);
    return true;
  }

  PipelineConfig cfg_;
  textfeat::VocabState vocab_;
  profiles::ProfileGraph profiles_;
  select::RunningVariance variance_;
  std::set<std::string> selected_;
  bool selection_ready_ = false;
  learners::OnlineModel model_;
  drift::WindowDetector<StoredSample> window_;
  drift::Eddm eddm_;
  drift::Adwin adwin_;
  std::deque<StoredSample> recent_;
  Confusion confusion_;
  std::uint64_t seen_ = 0;
  std::uint64_t labeled_ = 0;
  std::uint64_t drifts_ = 0;
  double seconds_ = 0.0;
};

}  // namespace revstream::eval
