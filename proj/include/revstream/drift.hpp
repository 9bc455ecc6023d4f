#pragma once

// Two-window word-gram drift detector with an adaptive current window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "revstream/chi2.hpp"
#include "revstream/types.hpp"

namespace revstream::drift {

enum class WindowAction { grow, hold, shrink, reset };

inline const char* to_string(WindowAction a) {
  switch (a) {
    case WindowAction::grow: return "grow";
    case WindowAction::hold: return "hold";
    case WindowAction::shrink: return "shrink";
    case WindowAction::reset: return "reset";
  }
  return "?";
}

struct WindowConfig {
  std::size_t cold_start = 500;
  std::size_t max_width = 2000;
  double drift_p = 0.05;
  double drift_aad = 0.05;
  double shrink_p = 0.1;  // p <= shrink_p: net width -1
  double grow_p = 0.5;    // p >= grow_p: net width +1
};

struct DriftReport {
  std::uint64_t sample_index = 0;  // zero-based
  double p_value = 0.0;
  double aad = 0.0;
  double acc_p = 0.0;
  double acc_ca = 0.0;
  bool drift = false;
  bool warmup = true;
  std::size_t w_after = 0;
  std::size_t p_size = 0;
  WindowAction action = WindowAction::grow;
};

inline void to_json(nlohmann::json& j, const DriftReport& r) {
  j = nlohmann::json{{"sample_index", r.sample_index}, {"p_value", r.p_value},
                     {"aad", r.aad},                   {"acc_p", r.acc_p},
                     {"acc_ca", r.acc_ca},             {"drift", r.drift},
                     {"warmup", r.warmup},             {"w_after", r.w_after},
                     {"p_size", r.p_size},             {"action", to_string(r.action)}};
}

inline void from_json(const nlohmann::json& j, DriftReport& r) {
  r.sample_index = j.at("sample_index").get<std::uint64_t>();
  r.p_value = j.at("p_value").get<double>();
  r.aad = j.at("aad").get<double>();
  r.acc_p = j.value("acc_p", 0.0);
  r.acc_ca = j.value("acc_ca", 0.0);
  r.drift = j.at("drift").get<bool>();
  r.warmup = j.value("warmup", false);
  r.w_after = j.at("w_after").get<std::size_t>();
  r.p_size = j.value("p_size", std::size_t{0});
  const auto a = j.at("action").get<std::string>();
  r.action = a == "grow"     ? WindowAction::grow
             : a == "hold"   ? WindowAction::hold
             : a == "shrink" ? WindowAction::shrink
                             : WindowAction::reset;
}

/// Correctness history with O(1) trailing-accuracy queries.
class AccuracyHistory {
 public:
  void push(Label actual, Label predicted) {
    prefix_.push_back(prefix_.back() + (actual == predicted ? 1u : 0u));
  }
  std::size_t size() const noexcept { return prefix_.size() - 1; }
  /// Accuracy over the last `m` entries (all entries when m exceeds the size); 0 if empty.
  double trailing(std::size_t m) const noexcept {
    m = std::min(m, size());
    if (m == 0) return 0.0;
    return static_cast<double>(prefix_.back() - prefix_[size() - m]) / static_cast<double>(m);
  }
  double overall() const noexcept { return trailing(size()); }

 private:
  std::vector<std::uint64_t> prefix_{0};
};

/// Each window entry carries a word-gram row and an arbitrary payload (the learner
/// sample, so the current window can be used as a retraining set).
template <typename Payload>
struct WindowEntry {
  FrequencyVector grams;
  Payload payload;
};

/// The detector keeps P as its column sums and size only; CA keeps rows so it can be
/// trimmed from the front and handed to a retrainer.
template <typename Payload = std::monostate>
class WindowDetector {
 public:
  using Entry = WindowEntry<Payload>;

  using PValueFn = std::function<double(const FrequencyVector&, const FrequencyVector&)>;

  explicit WindowDetector(WindowConfig cfg = {}, PValueFn pvalue = chi2_pvalue)
      : cfg_(cfg), pvalue_(std::move(pvalue)) {
    if (cfg_.cold_start == 0) throw InvalidArgument("drift: cold_start must be >= 1");
    if (cfg_.max_width == 0) throw InvalidArgument("drift: max_width must be >= 1");
  }

  /// Runs the analysis for the current sample and then appends (actual, predicted) to
  /// the label history. When the report says drift, current_window() holds the
  /// retraining set.
  DriftReport observe(FrequencyVector grams, Label actual, Label predicted,
                      Payload payload = {}) {
    DriftReport rep;
    rep.sample_index = k_;
    if (k_ < cfg_.cold_start) {
      for (const auto& [g, c] : grams) p_sums_[g] += c;
      ++p_size_;
    }
    push_ca(Entry{std::move(grams), std::move(payload)});
    ++k_;
    if (k_ == cfg_.cold_start) acc_p_ = history_.overall();
    if (k_ >= cfg_.cold_start) {
      rep.warmup = false;
      rep.p_value = pvalue_(ca_sums_, p_sums_);
      rep.acc_ca = history_.trailing(ca_.size());
      rep.aad = std::abs(acc_p_ - rep.acc_ca);
      if (rep.p_value <= cfg_.shrink_p) {
        pop_ca(2);
        rep.action = WindowAction::shrink;
      } else if (rep.p_value < cfg_.grow_p) {
        pop_ca(1);
        rep.action = WindowAction::hold;
      } else {
        rep.action = WindowAction::grow;
      }
      if (rep.p_value <= cfg_.drift_p && rep.aad >= cfg_.drift_aad) {
        p_sums_ = ca_sums_;
        p_size_ = ca_.size();
        acc_p_ = history_.trailing(p_size_);
        rep.drift = true;
        rep.action = WindowAction::reset;
        ++drift_count_;
      }
    }
    rep.acc_p = acc_p_;
    rep.w_after = ca_.size();
    rep.p_size = p_size_;
    history_.push(actual, predicted);
    return rep;
  }

  const std::deque<Entry>& current_window() const noexcept { return ca_; }
  std::size_t width() const noexcept { return ca_.size(); }
  std::size_t past_size() const noexcept { return p_size_; }
  const FrequencyVector& past_sums() const noexcept { return p_sums_; }
  const FrequencyVector& current_sums() const noexcept { return ca_sums_; }
  double acc_p() const noexcept { return acc_p_; }
  std::uint64_t samples() const noexcept { return k_; }
  std::uint64_t drift_count() const noexcept { return drift_count_; }
  const AccuracyHistory& history() const noexcept { return history_; }
  const WindowConfig& config() const noexcept { return cfg_; }

 private:
  void push_ca(Entry e) {
    for (const auto& [g, c] : e.grams) ca_sums_[g] += c;
    ca_.push_back(std::move(e));
    if (ca_.size() > cfg_.max_width) pop_ca(1);
  }

  void pop_ca(std::size_t count) {
    while (count-- > 0 && ca_.size() > 1) {
      for (const auto& [g, c] : ca_.front().grams) {
        auto it = ca_sums_.find(g);
        it->second -= c;
        if (it->second == 0.0) ca_sums_.erase(it);
      }
      ca_.pop_front();
    }
  }

  WindowConfig cfg_;
  PValueFn pvalue_;
  FrequencyVector p_sums_;
  std::size_t p_size_ = 0;
  std::deque<Entry> ca_;
  FrequencyVector ca_sums_;
  AccuracyHistory history_;
  double acc_p_ = 0.0;
  std::uint64_t k_ = 0;
  std::uint64_t drift_count_ = 0;
};

}  // namespace revstream::drift
