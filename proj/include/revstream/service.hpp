#pragma once

// Review service: single-writer pipeline, append-only NDJSON log with replay, moderator
// feedback, drift alerts and the read views behind the HTTP API.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <deque>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "revstream/explain.hpp"
#include "revstream/ingest.hpp"
#include "revstream/log.hpp"
#include "revstream/pipeline.hpp"

namespace revstream::service {

using nlohmann::json;

struct ServiceConfig {
  eval::PipelineConfig pipeline;
  std::size_t snapshot_every = 50;
  std::size_t min_frequency = 1;  // relevance threshold for explanations
};

inline json window_to_json(const drift::WindowConfig& w) {
  return {{"cold_start", w.cold_start}, {"max_width", w.max_width}, {"drift_p", w.drift_p},
          {"drift_aad", w.drift_aad},   {"shrink_p", w.shrink_p},   {"grow_p", w.grow_p}};
}

inline drift::WindowConfig window_from_json(const json& j) {
  drift::WindowConfig d, w;
  w.cold_start = j.value("cold_start", d.cold_start);
  w.max_width = j.value("max_width", d.max_width);
  w.drift_p = j.value("drift_p", d.drift_p);
  w.drift_aad = j.value("drift_aad", d.drift_aad);
  w.shrink_p = j.value("shrink_p", d.shrink_p);
  w.grow_p = j.value("grow_p", d.grow_p);
  return w;
}

inline void to_json(json& j, const ServiceConfig& c) {
  const auto& p = c.pipeline;
  j = json{{"profile", textfeat::to_string(p.profile)},
           {"model", learners::to_string(p.model)},
           {"hyperparameters", p.hyperparameters},
           {"detector", eval::to_string(p.detector)},
           {"window", window_to_json(p.window)},
           {"reselect_every", p.reselect_every},
           {"variance_threshold", p.variance_threshold},
           {"baseline_retrain_window", p.baseline_retrain_window},
           {"snapshot_every", c.snapshot_every},
           {"min_frequency", c.min_frequency}};
}

inline void from_json(const json& j, ServiceConfig& c) {
  ServiceConfig d;
  auto& p = c.pipeline;
  auto profile = textfeat::parse_profile(j.value("profile", std::string("yelp")));
  if (!profile) throw InvalidArgument("config: bad profile");
  p.profile = *profile;
  p.model = learners::parse_model_kind(j.value("model", std::string("htc")));
  p.hyperparameters = j.value("hyperparameters", json::object()).get<learners::Hyperparameters>();
  p.detector = eval::parse_detector(j.value("detector", std::string("none")));
  p.window = window_from_json(j.value("window", json::object()));
  p.reselect_every = j.value("reselect_every", d.pipeline.reselect_every);
  p.variance_threshold = j.value("variance_threshold", d.pipeline.variance_threshold);
  p.baseline_retrain_window = j.value("baseline_retrain_window", d.pipeline.baseline_retrain_window);
  c.snapshot_every = j.value("snapshot_every", d.snapshot_every);
  c.min_frequency = j.value("min_frequency", d.min_frequency);
}

struct Feedback {
  bool correct = true;
  std::int64_t ts = 0;
  std::string moderator_id;
};

inline void to_json(json& j, const Feedback& f) {
  j = json{{"correct", f.correct}, {"ts", f.ts}, {"moderator_id", f.moderator_id}};
}

struct EventRecord {
  std::size_t index = 0;
  RawEvent event;
  Prediction prediction;
  std::optional<drift::DriftReport> report;
  bool retrained = false;
  explain::ExplanationPayload explanation;  // description filled on request
  std::optional<Feedback> feedback;

  /// Moderator-corrected label when feedback exists, else the ground truth.
  std::optional<Label> effective_label() const {
    if (feedback) return feedback->correct ? prediction.label : other(prediction.label);
    return event.label;
  }
};

inline json prediction_json(const Prediction& p) {
  return {{"label", to_string(p.label)},
          {"confidence", p.confidence()},
          {"proba", {{"nonspam", p.proba[0]}, {"spam", p.proba[1]}}}};
}

inline void to_json(json& j, const EventRecord& r) {
  const auto eff = r.effective_label();
  j = json{{"index", r.index},
           {"event", r.event},
           {"prediction", prediction_json(r.prediction)},
           {"drift", r.report ? json(*r.report) : json(nullptr)},
           {"retrained", r.retrained},
           {"feedback", r.feedback ? json(*r.feedback) : json(nullptr)},
           {"effective_label", eff ? json(to_string(*eff)) : json(nullptr)}};
}

struct Alert {
  std::size_t id = 0;  // 1-based, in drift order
  std::size_t record_index = 0;
  std::string event_id;
  drift::DriftReport report;
  bool acknowledged = false;
};

inline void to_json(json& j, const Alert& a) {
  j = json{{"id", a.id},
           {"event_id", a.event_id},
           {"record_index", a.record_index},
           {"acknowledged", a.acknowledged},
           {"report", a.report}};
}

enum class Outcome { ok, not_found, conflict };

struct SearchQuery {
  std::string text;  // case-insensitive substring of the review text
  std::optional<std::int64_t> from, to;  // inclusive timestamp bounds
  std::size_t page = 1;                  // 1-based
  std::size_t page_size = 20;
};

inline constexpr std::size_t kMaxPageSize = 200;

inline std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

class Service {
 public:
  /// `log` receives the append-only record stream; it must outlive the service.
  explicit Service(ServiceConfig cfg = {}, std::ostream* log = nullptr)
      : cfg_(normalize(cfg)), pipeline_(cfg_.pipeline), log_(log) {
    published_trees_ = std::make_shared<const json>(pipeline_.model().export_trees());
    write_log({{"type", "config"}, {"config", cfg_}});
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept { return cfg_; }

  /// Runs one event through the pipeline (test-then-train) and stores its record.
  void process(const RawEvent& ev) {
    std::lock_guard writer(writer_mu_);
    process_locked(ev);
  }

  /// Processes events in order, publishing every `snapshot_every` samples and at the end.
  void process_all(const std::vector<RawEvent>& events, const std::atomic<bool>* stop = nullptr) {
    for (const auto& ev : events) {
      if (stop && stop->load()) break;
      process(ev);
    }
    publish();
  }

  /// Makes all processed records, the model and the metrics visible to readers.
  void publish() {
    std::lock_guard writer(writer_mu_);
    publish_locked();
  }

  /// Moderator verdict on a prediction. Updates the user's spam tendency with the
  /// corrected label; the learner is not retrained.
  Outcome apply_feedback(const std::string& event_id, bool correct, std::string moderator_id = {},
                         std::optional<std::int64_t> ts = std::nullopt) {
    std::lock_guard writer(writer_mu_);
    return feedback_locked(event_id, correct, std::move(moderator_id), ts, true);
  }

  Outcome acknowledge(std::size_t alert_id) {
    std::lock_guard writer(writer_mu_);
    return ack_locked(alert_id, true);
  }

  // -- readers -------------------------------------------------------------------

  std::size_t published() const {
    std::shared_lock lock(data_mu_);
    return published_;
  }

  std::shared_ptr<const json> trees() const {
    std::shared_lock lock(data_mu_);
    return published_trees_;
  }

  json search(const SearchQuery& q) const {
    std::shared_lock lock(data_mu_);
    const std::string needle = lowercase(q.text);
    const std::size_t size = std::clamp<std::size_t>(q.page_size, 1, kMaxPageSize);
    const std::size_t page = std::max<std::size_t>(q.page, 1);
    std::size_t total = 0;
    json items = json::array();
    for (std::size_t i = 0; i < published_; ++i) {
      const auto& r = records_[i];
      if (q.from && r.event.timestamp < *q.from) continue;
      if (q.to && r.event.timestamp > *q.to) continue;
      if (!needle.empty() && lowercase(r.event.text).find(needle) == std::string::npos) continue;
      if (total >= (page - 1) * size && total < page * size) items.push_back(summary_json(r));
      ++total;
    }
    return {{"total", total}, {"page", page}, {"page_size", size}, {"items", std::move(items)}};
  }

  std::optional<json> record(const std::string& event_id) const {
    std::shared_lock lock(data_mu_);
    const auto* r = find_published(event_id);
    if (!r) return std::nullopt;
    return json(*r);
  }

  /// Stored explanation with its description generated now (template when
  /// `generator` is null).
  std::optional<explain::ExplanationPayload> explanation(
      const std::string& event_id, explain::DescriptionGenerator* generator = nullptr) const {
    explain::ExplanationPayload p;
    {
      std::shared_lock lock(data_mu_);
      const auto* r = find_published(event_id);
      if (!r) return std::nullopt;
      p = r->explanation;
    }
    explain::describe(p, generator);
    return p;
  }

  json alerts_json() const {
    std::shared_lock lock(data_mu_);
    json out = json::array();
    for (const auto& a : alerts_)
      if (a.record_index < published_) out.push_back(a);
    return out;
  }

  /// Prequential metrics and counters at the last publication; no timing fields.
  json metrics_json() const {
    std::shared_lock lock(data_mu_);
    std::size_t alerts = 0, open = 0;
    for (const auto& a : alerts_) {
      if (a.record_index >= published_) continue;
      ++alerts;
      open += !a.acknowledged;
    }
    std::size_t fb = 0, fb_correct = 0;
    for (std::size_t i = 0; i < published_; ++i) {
      if (!records_[i].feedback) continue;
      ++fb;
      fb_correct += records_[i].feedback->correct;
    }
    return {{"samples", published_},
            {"labeled", published_labeled_},
            {"confusion", published_confusion_},
            {"metrics", eval::summarize(published_confusion_)},
            {"drifts", published_drifts_},
            {"alerts", {{"total", alerts}, {"unacknowledged", open}}},
            {"feedback", {{"total", fb}, {"correct", fb_correct}, {"incorrect", fb - fb_correct}}},
            {"model", learners::to_string(cfg_.pipeline.model)},
            {"detector", eval::to_string(cfg_.pipeline.detector)},
            {"hyperparameters", published_hyperparameters_}};
  }

  /// Everything needed to audit a run: config, records, alerts, metrics and model.
  json export_json() const {
    json records = json::array();
    std::shared_ptr<const json> trees;
    {
      std::shared_lock lock(data_mu_);
      for (std::size_t i = 0; i < published_; ++i) records.push_back(records_[i]);
      trees = published_trees_;
    }
    return {{"config", cfg_},
            {"records", std::move(records)},
            {"alerts", alerts_json()},
            {"metrics", metrics_json()},
            {"model", *trees}};
  }

  /// Current spam tendency and labeled-post count of a user (live state).
  std::optional<std::pair<double, std::uint64_t>> user_tendency(const std::string& user_id) {
    std::lock_guard writer(writer_mu_);
    const auto* u = pipeline_.profiles().user(user_id);
    if (!u) return std::nullopt;
    return std::pair{u->spam_tendency(), u->labeled_count};
  }

  /// Prediction records in a replayed log that disagreed with the recomputed run.
  std::size_t replay_mismatches() const noexcept { return replay_mismatches_; }

  /// Rebuilds a service from an append-only log. Event, feedback and ack records are
  /// re-applied in order; prediction records are checked against the recomputation.
  static std::unique_ptr<Service> replay(std::istream& in, std::ostream* new_log = nullptr) {
    std::string line;
    std::unique_ptr<Service> s;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw InvalidArgument("replay: line " + std::to_string(line_no) + ": " + e.what());
      }
      const auto type = rec.value("type", std::string());
      if (!s) {
        if (type != "config") throw InvalidArgument("replay: log must start with a config record");
        s = std::make_unique<Service>(rec.at("config").get<ServiceConfig>(), new_log);
        continue;
      }
      std::lock_guard writer(s->writer_mu_);
      if (type == "event") {
        s->process_locked(rec.at("event").get<RawEvent>());
      } else if (type == "prediction") {
        std::shared_lock lock(s->data_mu_);
        const auto idx = rec.at("index").get<std::size_t>();
        if (idx >= s->records_.size() ||
            rec.at("label").get<std::string>() != to_string(s->records_[idx].prediction.label))
          ++s->replay_mismatches_;
      } else if (type == "feedback") {
        std::optional<std::int64_t> ts;
        if (rec.contains("ts")) ts = rec.at("ts").get<std::int64_t>();
        s->feedback_locked(rec.at("event_id").get<std::string>(), rec.at("correct").get<bool>(),
                           rec.value("moderator_id", std::string()), ts, true);
      } else if (type == "ack") {
        s->ack_locked(rec.at("alert_id").get<std::size_t>(), true);
      } else if (type == "publish") {
        s->publish_locked();
      } else if (type != "drift") {
        log::warn("replay: unknown record type '" + type + "' on line " + std::to_string(line_no));
      }
    }
    if (!s) throw InvalidArgument("replay: empty log");
    s->publish();
    if (s->replay_mismatches_ > 0)
      log::warn("replay: " + std::to_string(s->replay_mismatches_) + " prediction(s) differ from the log");
    return s;
  }

 private:
  static ServiceConfig normalize(ServiceConfig c) {
    c.pipeline.track_history = true;
    c.pipeline.record_paths = true;
    if (c.snapshot_every == 0) c.snapshot_every = 1;
    return c;
  }

  static json summary_json(const EventRecord& r) {
    return {{"index", r.index},
            {"event_id", r.event.event_id},
            {"user_id", r.event.user_id},
            {"item_id", r.event.item_id},
            {"timestamp", r.event.timestamp},
            {"rating", r.event.rating ? json(*r.event.rating) : json(nullptr)},
            {"text", r.event.text},
            {"label", r.event.label ? json(to_string(*r.event.label)) : json(nullptr)},
            {"prediction", prediction_json(r.prediction)},
            {"drift", r.report && r.report->drift},
            {"feedback", r.feedback ? json(*r.feedback) : json(nullptr)}};
  }

  const EventRecord* find_published(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end() || it->second >= published_) return nullptr;
    return &records_[it->second];
  }

  void write_log(const json& rec) {
    if (log_) *log_ << rec.dump() << '\n';
  }

  void process_locked(const RawEvent& ev) {
    if (by_id_.count(ev.event_id)) {
      log::warn("process: duplicate event id '" + ev.event_id + "' skipped");
      return;
    }
    write_log({{"type", "event"}, {"event", ev}});
    auto step = pipeline_.step(ev);
    EventRecord rec;
    rec.index = records_.size();
    rec.event = ev;
    rec.prediction = step.prediction;
    rec.report = step.report;
    rec.retrained = step.retrained;
    std::vector<explain::DecisionPath> paths;
    for (std::size_t t = 0; t < step.paths.size(); ++t) {
      explain::DecisionPath dp;
      dp.tree_id = t;
      dp.leaf_id = step.paths[t].leaf_id;
      dp.leaf_counts = step.paths[t].leaf_counts;
      for (const auto& s : step.paths[t].steps)
        dp.steps.push_back({s.feature, s.threshold, s.value,
                            s.greater ? explain::Direction::greater : explain::Direction::less_equal,
                            s.node_id});
      paths.push_back(std::move(dp));
    }
    rec.explanation = explain::assemble(ev.event_id, step.prediction, std::move(paths), step.input,
                                        pipeline_.profiles().user(ev.user_id), step.report,
                                        {.min_frequency = cfg_.min_frequency});
    rec.explanation.description.clear();
    write_log({{"type", "prediction"},
               {"index", rec.index},
               {"event_id", ev.event_id},
               {"label", to_string(step.prediction.label)},
               {"proba", step.prediction.proba}});
    const bool drift = step.retrained || (step.report && step.report->drift) ||
                       step.baseline_state == drift::DetectorState::drift;
    {
      std::unique_lock lock(data_mu_);
      by_id_[ev.event_id] = rec.index;
      if (drift) {
        Alert a;
        a.id = alerts_.size() + 1;
        a.record_index = rec.index;
        a.event_id = ev.event_id;
        if (step.report) {
          a.report = *step.report;
        } else {
          a.report.sample_index = rec.index;
          a.report.drift = true;
          a.report.warmup = false;
        }
        alerts_.push_back(a);
        write_log({{"type", "drift"}, {"index", rec.index}, {"alert_id", a.id}});
      }
      records_.push_back(std::move(rec));
    }
    if (records_.size() % cfg_.snapshot_every == 0) publish_locked();
  }

  void publish_locked() {
    auto trees = std::make_shared<const json>(pipeline_.model().export_trees());
    std::unique_lock lock(data_mu_);
    published_ = records_.size();
    published_trees_ = std::move(trees);
    published_confusion_ = pipeline_.confusion();
    published_labeled_ = pipeline_.labeled();
    published_drifts_ = pipeline_.drifts();
    published_hyperparameters_ = pipeline_.hyperparameters();
  }

  Outcome feedback_locked(const std::string& event_id, bool correct, std::string moderator_id,
                          std::optional<std::int64_t> ts, bool log_it) {
    std::unique_lock lock(data_mu_);
    auto it = by_id_.find(event_id);
    if (it == by_id_.end()) return Outcome::not_found;
    auto& r = records_[it->second];
    if (r.feedback) return Outcome::conflict;
    const std::optional<Label> previous = r.event.label;
    Feedback f;
    f.correct = correct;
    f.ts = ts ? *ts
              : std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();
    f.moderator_id = std::move(moderator_id);
    r.feedback = f;
    pipeline_.profiles().relabel(r.event.user_id, previous, *r.effective_label());
    if (log_it)
      write_log({{"type", "feedback"},
                 {"event_id", event_id},
                 {"correct", correct},
                 {"ts", f.ts},
                 {"moderator_id", f.moderator_id}});
    return Outcome::ok;
  }

  Outcome ack_locked(std::size_t alert_id, bool log_it) {
    std::unique_lock lock(data_mu_);
    if (alert_id == 0 || alert_id > alerts_.size()) return Outcome::not_found;
    auto& a = alerts_[alert_id - 1];
    if (a.acknowledged) return Outcome::conflict;
    a.acknowledged = true;
    if (log_it) write_log({{"type", "ack"}, {"alert_id", alert_id}});
    return Outcome::ok;
  }

  ServiceConfig cfg_;
  eval::Pipeline pipeline_;
  std::ostream* log_;

  std::mutex writer_mu_;              // serialises every mutation
  mutable std::shared_mutex data_mu_;  // guards what readers see
  std::deque<EventRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<Alert> alerts_;
  std::size_t published_ = 0;
  std::shared_ptr<const json> published_trees_;
  eval::Confusion published_confusion_;
  std::uint64_t published_labeled_ = 0;
  std::uint64_t published_drifts_ = 0;
  learners::Hyperparameters published_hyperparameters_;
  std::size_t replay_mismatches_ = 0;
};

}  // namespace revstream::service
