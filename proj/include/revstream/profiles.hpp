#pragma once

// Incremental user and item profiles over the user-item review graph.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "revstream/log.hpp"
#include "revstream/textfeat.hpp"
#include "revstream/types.hpp"

namespace revstream::profiles {

inline constexpr double kSecondsPerWeek = 604800.0;

/// Running mean and maximum of a feature.
struct IncrementalStat {
  double avg = 0.0;
  double max = 0.0;
  std::uint64_t count = 0;

  void update(double value) {
    if (std::isnan(value)) throw InvalidArgument("IncrementalStat: NaN observation");
    ++count;
    if (count == 1) {
      avg = value;
      max = value;
      return;
    }
    avg += (value - avg) / static_cast<double>(count);
    max = std::max(max, value);
  }
};

inline IncrementalStat update_stat(IncrementalStat s, double value) {
  s.update(value);
  return s;
}

using StatMap = std::map<std::string, IncrementalStat, std::less<>>;

struct UserProfile {
  StatMap stats;
  std::uint64_t post_count = 0;
  std::uint64_t labeled_count = 0;
  std::uint64_t spam_count = 0;
  std::int64_t first_post_ts = 0;
  std::unordered_map<std::string, std::int64_t> items;  // item -> last review ts
  std::map<std::string, std::deque<double>, std::less<>> history;

  double spam_tendency() const noexcept {
    return labeled_count == 0 ? 0.0
                              : static_cast<double>(spam_count) / static_cast<double>(labeled_count);
  }
  double antiquity_weeks(std::int64_t now) const noexcept {
    if (post_count == 0) return 0.0;
    return std::max<double>(0.0, static_cast<double>(now - first_post_ts) / kSecondsPerWeek);
  }
  double posting_frequency(std::int64_t now) const noexcept {
    return static_cast<double>(post_count) / std::max(antiquity_weeks(now), 1.0);
  }
  std::size_t degree() const noexcept { return items.size(); }
};

struct ItemProfile {
  StatMap stats;
  std::array<StatMap, 5> by_rating;  // index rating-1
};

// ---------------------------------------------------------------------------
// Feature identifiers

namespace keys {
inline constexpr std::string_view user_post_count = "user_post_count";
inline constexpr std::string_view user_spam_tendency = "user_spam_tendency";
inline constexpr std::string_view user_antiquity_weeks = "user_antiquity_weeks";
inline constexpr std::string_view user_posting_frequency = "user_posting_frequency";
}  // namespace keys

inline std::string user_avg_key(std::string_view k) { return "user_avg_" + std::string(k); }
inline std::string user_max_key(std::string_view k) { return "user_max_" + std::string(k); }
inline std::string item_avg_key(std::string_view k) { return "item_avg_" + std::string(k); }
inline std::string item_max_key(std::string_view k) { return "item_max_" + std::string(k); }
inline std::string item_rating_avg_key(std::string_view k) {
  return "item_rating_avg_" + std::string(k);
}
inline std::string item_rating_max_key(std::string_view k) {
  return "item_rating_max_" + std::string(k);
}

/// Base content feature id (1..27) for a content or passthrough key, 0 if unknown.
inline int base_feature_id(std::string_view key) {
  namespace k = textfeat::keys;
  static const std::map<std::string_view, int, std::less<>> ids = {
      {k::adjective_ratio, 1}, {k::adverb_ratio, 2}, {k::char_count, 3},
      {k::difficult_word_count, 4}, {k::flesch, 6}, {k::interjection_ratio, 7},
      {k::eflaw, 8}, {k::noun_ratio, 9}, {k::polarity, 10}, {k::pronoun_ratio, 11},
      {k::punctuation_ratio, 12}, {k::reading_time, 13}, {k::url_count, 14},
      {k::verb_ratio, 15}, {k::word_count, 16}, {k::rating_polarity_deviation, 18},
      {k::rating, 19}, {"bot_flag", 20}, {"deleted_flag", 21}, {"new_flag", 22},
      {"revert_flag", 23}, {"size_difference", 24}};
  if (auto it = ids.find(key); it != ids.end()) return it->second;
  if (key.starts_with("emotion_")) return 5;
  if (key.starts_with("wg:")) return 17;
  if (key.starts_with("edit_quality")) return 25;
  if (key.starts_with("item_quality")) return 26;
  if (key.starts_with("article_quality")) return 27;
  return 0;
}

struct FeatureIdRow {
  int id;
  std::string key;
  std::string description;
};

/// Published mapping of feature ids 1..177 to the keys this library emits. One id can
/// cover several keys (the five emotions, the quality probability families).
inline std::vector<FeatureIdRow> feature_id_table() {
  namespace k = textfeat::keys;
  std::vector<std::pair<int, std::string>> base = {
      {1, std::string(k::adjective_ratio)}, {2, std::string(k::adverb_ratio)},
      {3, std::string(k::char_count)}, {4, std::string(k::difficult_word_count)}};
  for (std::size_t e = 0; e < textfeat::kEmotions.size(); ++e)
    base.emplace_back(5, textfeat::emotion_key(e));
  for (auto [id, key] : std::initializer_list<std::pair<int, std::string_view>>{
           {6, k::flesch}, {7, k::interjection_ratio}, {8, k::eflaw}, {9, k::noun_ratio},
           {10, k::polarity}, {11, k::pronoun_ratio}, {12, k::punctuation_ratio},
           {13, k::reading_time}, {14, k::url_count}, {15, k::verb_ratio},
           {16, k::word_count}, {17, "wg:*"}, {18, k::rating_polarity_deviation},
           {19, k::rating}, {20, "bot_flag"}, {21, "deleted_flag"}, {22, "new_flag"},
           {23, "revert_flag"}, {24, "size_difference"}, {25, "edit_quality_*"},
           {26, "item_quality_*"}, {27, "article_quality_*"}})
    base.emplace_back(id, std::string(key));

  std::vector<FeatureIdRow> rows;
  for (const auto& [id, key] : base) rows.push_back({id, key, "content"});
  for (const auto& [id, key] : base) {
    if (id == 17) continue;  // word-grams have no scalar profile statistic
    rows.push_back({28 + 2 * (id - 1), user_avg_key(key), "user incremental average"});
    rows.push_back({29 + 2 * (id - 1), user_max_key(key), "user incremental maximum"});
  }
  rows.push_back({82, std::string(keys::user_post_count), "user post count"});
  rows.push_back({83, std::string(keys::user_spam_tendency), "user spam tendency"});
  rows.push_back({84, std::string(keys::user_antiquity_weeks), "user posting antiquity (weeks)"});
  rows.push_back({85, std::string(keys::user_posting_frequency), "user weekly posting frequency"});
  for (const auto& [id, key] : base) {
    if (id == 17) continue;
    rows.push_back({86 + 2 * (id - 1), item_avg_key(key), "item incremental average"});
    rows.push_back({87 + 2 * (id - 1), item_max_key(key), "item incremental maximum"});
  }
  for (const auto& [id, key] : base) {
    if (id == 17 || id > 19) continue;
    rows.push_back({140 + 2 * (id - 1), item_rating_avg_key(key),
                    "item incremental average for the event's rating"});
    rows.push_back({141 + 2 * (id - 1), item_rating_max_key(key),
                    "item incremental maximum for the event's rating"});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.id < b.id; });
  return rows;
}

inline std::string feature_id_table_csv() {
  std::string out = "id,key,description\n";
  for (const auto& r : feature_id_table())
    out += std::to_string(r.id) + "," + r.key + "," + r.description + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Graph

struct ProfileConfig {
  /// Keep per-user value histories (needed for severity coloring).
  bool track_history = false;
  std::size_t history_limit = 512;
};

class ProfileGraph {
 public:
  explicit ProfileGraph(ProfileConfig cfg = {}) : cfg_(cfg) {}

  const ProfileConfig& config() const noexcept { return cfg_; }

  const UserProfile* user(const std::string& id) const {
    auto it = users_.find(id);
    return it == users_.end() ? nullptr : &it->second;
  }
  const ItemProfile* item(const std::string& id) const {
    auto it = items_.find(id);
    return it == items_.end() ? nullptr : &it->second;
  }
  std::size_t user_count() const noexcept { return users_.size(); }
  std::size_t item_count() const noexcept { return items_.size(); }
  bool has_edge(const std::string& user_id, const std::string& item_id) const {
    auto u = user(user_id);
    return u && u->items.count(item_id);
  }

  /// Content features joined with the user and item profile features as they stood
  /// before this event; the event is then folded into the profiles.
  FeatureVector enrich(const RawEvent& ev, const FeatureVector& content) {
    FeatureVector fv = content;
    append_profile_features(ev, content, fv);
    apply(ev, content, fv);
    return fv;
  }

  /// Records a revealed label for the user's spam tendency.
  void record_label(const std::string& user_id, Label label) {
    auto it = users_.find(user_id);
    if (it == users_.end()) {
      log::warn("record_label: unknown user '" + user_id + "'");
      return;
    }
    ++it->second.labeled_count;
    it->second.spam_count += label == Label::spam;
  }

  /// Replaces a previously recorded label (moderator correction). `previous` empty means
  /// the event had contributed no label.
  void relabel(const std::string& user_id, std::optional<Label> previous, Label corrected) {
    auto it = users_.find(user_id);
    if (it == users_.end()) {
      log::warn("relabel: unknown user '" + user_id + "'");
      return;
    }
    auto& u = it->second;
    if (previous) {
      if (u.labeled_count > 0) --u.labeled_count;
      if (*previous == Label::spam && u.spam_count > 0) --u.spam_count;
    }
    ++u.labeled_count;
    u.spam_count += corrected == Label::spam;
  }

 private:
  void append_profile_features(const RawEvent& ev, const FeatureVector& content,
                               FeatureVector& fv) const {
    static const UserProfile empty_user;
    static const ItemProfile empty_item;
    const UserProfile* u = user(ev.user_id);
    const ItemProfile* it = item(ev.item_id);
    if (!u) u = &empty_user;
    if (!it) it = &empty_item;
    const StatMap* rating_stats =
        ev.rating && is_valid_rating(*ev.rating) ? &it->by_rating[*ev.rating - 1] : nullptr;

    auto lookup = [](const StatMap& m, const std::string& k) -> const IncrementalStat* {
      auto f = m.find(k);
      return f == m.end() ? nullptr : &f->second;
    };
    for (const auto& [key, _] : content) {
      const int id = base_feature_id(key);
      const auto* us = lookup(u->stats, key);
      fv[user_avg_key(key)] = us ? us->avg : 0.0;
      fv[user_max_key(key)] = us ? us->max : 0.0;
      const auto* is = lookup(it->stats, key);
      fv[item_avg_key(key)] = is ? is->avg : 0.0;
      fv[item_max_key(key)] = is ? is->max : 0.0;
      if (id >= 1 && id <= 19) {
        const auto* rs = rating_stats ? lookup(*rating_stats, key) : nullptr;
        fv[item_rating_avg_key(key)] = rs ? rs->avg : 0.0;
        fv[item_rating_max_key(key)] = rs ? rs->max : 0.0;
      }
    }
    fv[std::string(keys::user_post_count)] = static_cast<double>(u->post_count);
    fv[std::string(keys::user_spam_tendency)] = u->spam_tendency();
    fv[std::string(keys::user_antiquity_weeks)] = u->antiquity_weeks(ev.timestamp);
    fv[std::string(keys::user_posting_frequency)] = u->posting_frequency(ev.timestamp);
  }

  void apply(const RawEvent& ev, const FeatureVector& content, const FeatureVector& fv) {
    auto& u = users_[ev.user_id];
    auto& it = items_[ev.item_id];
    StatMap* rating_stats =
        ev.rating && is_valid_rating(*ev.rating) ? &it.by_rating[*ev.rating - 1] : nullptr;
    for (const auto& [key, value] : content) {
      if (std::isnan(value)) {
        log::warn("enrich: NaN feature '" + key + "' skipped");
        continue;
      }
      u.stats[key].update(value);
      it.stats[key].update(value);
      if (rating_stats && base_feature_id(key) >= 1 && base_feature_id(key) <= 19)
        (*rating_stats)[key].update(value);
    }
    if (u.post_count == 0) u.first_post_ts = ev.timestamp;
    ++u.post_count;
    u.items[ev.item_id] = ev.timestamp;

    if (cfg_.track_history) {
      auto push = [&](const std::string& key, double v) {
        auto& h = u.history[key];
        h.push_back(v);
        if (h.size() > cfg_.history_limit) h.pop_front();
      };
      for (const auto& [key, value] : fv) {
        if (key.starts_with("item_") || key.starts_with("wg:") || std::isnan(value)) continue;
        push(key, value);
      }
    }
  }

  ProfileConfig cfg_;
  std::unordered_map<std::string, UserProfile> users_;
  std::unordered_map<std::string, ItemProfile> items_;
};

}  // namespace revstream::profiles
