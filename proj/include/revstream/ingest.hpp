#pragma once

// CSV ingestion into chronologically sorted RawEvents, and RawEvent JSON.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "revstream/textfeat.hpp"
#include "revstream/types.hpp"

namespace revstream::ingest {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RFC 4180 records: comma separated, double-quoted fields may hold commas, quotes ("")
/// and line breaks. A trailing CR is dropped.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field += c;
    }
  }
  if (any) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_row();
  }
  return rows;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Integer UTC seconds, or "YYYY-MM-DD" with an optional "[ T]HH:MM[:SS]" part (UTC).
inline std::optional<std::int64_t> parse_timestamp(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && p == s.data() + s.size() && !s.empty()) return v;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n != 3 && n != 6 && n != 7) return std::nullopt;
  if (n > 3 && sep != ' ' && sep != 'T') return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch() / seconds{1}) + h * 3600 +
         mi * 60 + sec;
}

/// Label column: spam/nonspam/ham/1/0, and Y/N as in the Yelp filter data (Y = filtered).
inline std::optional<Label> parse_csv_label(const std::string& s) {
  if (s == "Y" || s == "y") return Label::spam;
  if (s == "N" || s == "n") return Label::nonspam;
  return parse_label(s);
}

struct IngestStats {
  std::size_t rows = 0;       // data rows seen
  std::size_t parsed = 0;
  std::size_t malformed = 0;
  std::size_t unlabeled = 0;
  std::vector<std::string> diagnostics;  // first few problems, "line N: reason"
};

struct IngestResult {
  std::vector<RawEvent> events;
  IngestStats stats;
};

struct IngestConfig {
  textfeat::DatasetProfile profile = textfeat::DatasetProfile::yelp;
  double max_malformed_fraction = 0.01;
  std::size_t min_rows_for_fatal = 100;
  std::size_t max_diagnostics = 5;
};

/// Reads a header row and the data rows. Required columns: review_id (or event_id),
/// user_id, item_id, timestamp, text, label; rating is required for yelp, optional for
/// mediawiki. Any other column is a numeric passthrough. Bad rows are skipped and
/// counted; more than 1% bad rows (on files of at least 100 rows) is fatal.
inline IngestResult ingest_csv(std::istream& in, const IngestConfig& cfg = {}) {
  auto rows = parse_csv(in);
  if (rows.empty()) throw IngestError("ingest: missing header row");
  const auto& header = rows[0];
  auto col = [&](std::initializer_list<std::string_view> names) -> std::ptrdiff_t {
    for (auto name : names) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) return it - header.begin();
    }
    return -1;
  };
  const auto c_id = col({"review_id", "event_id", "revision_id"});
  const auto c_user = col({"user_id"});
  const auto c_item = col({"item_id"});
  const auto c_ts = col({"timestamp", "date"});
  const auto c_text = col({"text"});
  const auto c_label = col({"label"});
  const auto c_rating = col({"rating"});
  const bool rating_required = cfg.profile == textfeat::DatasetProfile::yelp;
  std::string missing;
  for (auto [c, name] : {std::pair{c_id, "review_id"}, {c_user, "user_id"}, {c_item, "item_id"},
                         {c_ts, "timestamp"}, {c_text, "text"}, {c_label, "label"}})
    if (c < 0) missing += std::string(missing.empty() ? "" : ", ") + name;
  if (rating_required && c_rating < 0) missing += std::string(missing.empty() ? "" : ", ") + "rating";
  if (!missing.empty()) throw IngestError("ingest: missing column(s): " + missing);

  IngestResult res;
  auto& st = res.stats;
  auto bad = [&](std::size_t line, const std::string& why) {
    ++st.malformed;
    if (st.diagnostics.size() < cfg.max_diagnostics)
      st.diagnostics.push_back("row " + std::to_string(line) + ": " + why);
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++st.rows;
    if (row.size() != header.size()) {
      bad(r, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
      continue;
    }
    RawEvent ev;
    ev.event_id = row[c_id];
    ev.user_id = row[c_user];
    ev.item_id = row[c_item];
    ev.text = row[c_text];
    if (ev.event_id.empty() || ev.user_id.empty() || ev.item_id.empty()) {
      bad(r, "empty id");
      continue;
    }
    auto ts = parse_timestamp(row[c_ts]);
    if (!ts) {
      bad(r, "bad timestamp '" + row[c_ts] + "'");
      continue;
    }
    ev.timestamp = *ts;
    if (c_rating >= 0 && !row[c_rating].empty()) {
      int v = 0;
      const auto& s = row[c_rating];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !is_valid_rating(v)) {
        bad(r, "bad rating '" + s + "'");
        continue;
      }
      ev.rating = v;
    } else if (rating_required) {
      bad(r, "missing rating");
      continue;
    }
    if (!row[c_label].empty()) {
      ev.label = parse_csv_label(row[c_label]);
      if (!ev.label) {
        bad(r, "bad label '" + row[c_label] + "'");
        continue;
      }
    } else {
      ++st.unlabeled;
    }
    bool ok = true;
    for (std::size_t c = 0; c < header.size() && ok; ++c) {
      const auto sc = static_cast<std::ptrdiff_t>(c);
      if (sc == c_id || sc == c_user || sc == c_item || sc == c_ts || sc == c_text ||
          sc == c_label || sc == c_rating || row[c].empty())
        continue;
      char* end = nullptr;
      const double v = std::strtod(row[c].c_str(), &end);
      if (end != row[c].c_str() + row[c].size() || !std::isfinite(v)) {
        bad(r, "non-numeric " + header[c] + " '" + row[c] + "'");
        ok = false;
      } else {
        ev.extra[header[c]] = v;
      }
    }
    if (!ok) continue;
    res.events.push_back(std::move(ev));
    ++st.parsed;
  }
  if (st.rows >= cfg.min_rows_for_fatal &&
      static_cast<double>(st.malformed) > cfg.max_malformed_fraction * static_cast<double>(st.rows)) {
    std::string msg = "ingest: " + std::to_string(st.malformed) + " of " + std::to_string(st.rows) +
                      " rows malformed";
    for (const auto& d : st.diagnostics) msg += "\n  " + d;
    throw IngestError(msg);
  }
  std::stable_sort(res.events.begin(), res.events.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.timestamp < b.timestamp; });
  return res;
}

inline IngestResult ingest_csv(const std::string& path, const IngestConfig& cfg = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("ingest: cannot read '" + path + "'");
  return ingest_csv(in, cfg);
}

/// Writes events in the ingest schema (extras as trailing columns, union of keys).
inline void write_csv(std::ostream& out, const std::vector<RawEvent>& events) {
  std::set<std::string> extras;
  for (const auto& e : events)
    for (const auto& [k, _] : e.extra) extras.insert(k);
  out << "review_id,user_id,item_id,timestamp,rating,text,label";
  for (const auto& k : extras) out << ',' << csv_escape(k);
  out << '\n';
  for (const auto& e : events) {
    out << csv_escape(e.event_id) << ',' << csv_escape(e.user_id) << ',' << csv_escape(e.item_id)
        << ',' << e.timestamp << ',' << (e.rating ? std::to_string(*e.rating) : "") << ','
        << csv_escape(e.text) << ',' << (e.label ? std::string(to_string(*e.label)) : "");
    for (const auto& k : extras) {
      out << ',';
      if (auto it = e.extra.find(k); it != e.extra.end()) out << nlohmann::json(it->second).dump();
    }
    out << '\n';
  }
}

}  // namespace revstream::ingest

namespace revstream {

inline void to_json(nlohmann::json& j, const RawEvent& e) {
  j = nlohmann::json{{"event_id", e.event_id},
                     {"user_id", e.user_id},
                     {"item_id", e.item_id},
                     {"timestamp", e.timestamp},
                     {"text", e.text},
                     {"rating", e.rating ? nlohmann::json(*e.rating) : nlohmann::json(nullptr)},
                     {"label", e.label ? nlohmann::json(to_string(*e.label)) : nlohmann::json(nullptr)},
                     {"extra", e.extra}};
}

inline void from_json(const nlohmann::json& j, RawEvent& e) {
  e.event_id = j.at("event_id").get<std::string>();
  e.user_id = j.at("user_id").get<std::string>();
  e.item_id = j.at("item_id").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::int64_t>();
  e.text = j.at("text").get<std::string>();
  e.rating.reset();
  if (j.contains("rating") && !j.at("rating").is_null()) e.rating = j.at("rating").get<int>();
  e.label.reset();
  if (j.contains("label") && !j.at("label").is_null()) {
    e.label = parse_label(j.at("label").get<std::string>());
    if (!e.label) throw InvalidArgument("event: bad label");
  }
  e.extra = j.value("extra", std::map<std::string, double>{});
}

}  // namespace revstream
