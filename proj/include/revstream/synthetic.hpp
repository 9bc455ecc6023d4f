#pragma once

// Deterministic synthetic review streams for tests, the acceptance suite and demos.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "revstream/types.hpp"

namespace revstream::synthetic {

/// Made-up tokens of equal length and syllable count, outside every built-in lexicon, so
/// the content features carry no class signal and only word-grams do.
inline const std::vector<std::string>& family_a() {
  static const std::vector<std::string> f = {"zorbin", "quelta", "morvik"};
  return f;
}
inline const std::vector<std::string>& family_b() {
  static const std::vector<std::string> f = {"talvon", "presku", "dunmar"};
  return f;
}
inline const std::vector<std::string>& neutral_tokens() {
  static const std::vector<std::string> f = {"vantor", "kelpim", "rostad", "bilmur", "fendor"};
  return f;
}

struct FlipConfig {
  std::size_t n = 10000;
  std::size_t flip_at = 5000;
  double spam_rate = 0.3;
  std::size_t class_tokens = 2;    // drawn from the class family
  std::size_t neutral_count = 3;   // drawn from the neutral family
  std::int64_t start_ts = 1'600'000'000;
  std::uint64_t seed = 7;
};

/// Before `flip_at` spam reviews use family A and non-spam family B; afterwards the
/// families swap. Every event has its own user and item, so profiles stay cold.
inline std::vector<RawEvent> vocabulary_flip_stream(const FlipConfig& cfg = {}) {
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution spam(cfg.spam_rate);
  std::vector<RawEvent> out;
  out.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const bool is_spam = spam(rng);
    const bool flipped = i >= cfg.flip_at;
    const auto& family = (is_spam != flipped) ? family_a() : family_b();
    std::vector<std::string> words;
    std::sample(family.begin(), family.end(), std::back_inserter(words), cfg.class_tokens, rng);
    std::sample(neutral_tokens().begin(), neutral_tokens().end(), std::back_inserter(words),
                cfg.neutral_count, rng);
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    text += ".";
    RawEvent ev;
    ev.event_id = "r" + std::to_string(i);
    ev.user_id = "u" + std::to_string(i);
    ev.item_id = "i" + std::to_string(i);
    ev.timestamp = cfg.start_ts + static_cast<std::int64_t>(i) * 60;
    ev.text = std::move(text);
    ev.rating = 3;
    ev.label = is_spam ? Label::spam : Label::nonspam;
    out.push_back(std::move(ev));
  }
  return out;
}

/// A fixed cycle of texts and labels; word-gram proportions are the same in every window.
inline std::vector<RawEvent> stationary_stream(std::size_t n, std::int64_t start_ts = 1'600'000'000) {
  static const std::vector<std::pair<std::string, Label>> cycle = {
      {"Great pasta and friendly staff, we will come back for the pasta.", Label::nonspam},
      {"Best deals online, visit now for cheap watches and cheap bags!", Label::spam},
      {"The staff was friendly but the wait was long on a busy night.", Label::nonspam},
      {"Cheap watches, cheap bags, best deals, visit now!!!", Label::spam},
      {"Quiet place with good coffee and a friendly owner.", Label::nonspam},
  };
  std::vector<RawEvent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [text, label] = cycle[i % cycle.size()];
    RawEvent ev;
    ev.event_id = "s" + std::to_string(i);
    ev.user_id = "su" + std::to_string(i % 37);
    ev.item_id = "si" + std::to_string(i % 11);
    ev.timestamp = start_ts + static_cast<std::int64_t>(i) * 60;
    ev.text = text;
    ev.rating = 1 + static_cast<int>(i % 5);
    ev.label = label;
    out.push_back(std::move(ev));
  }
  return out;
}

/// Bernoulli 0/1 stream whose mean switches between `rates` every `segment` steps.
inline std::vector<double> correctness_stream(std::size_t n, std::size_t segment,
                                              const std::vector<double>& rates,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::bernoulli_distribution b(rates[(i / segment) % rates.size()]);
    out.push_back(b(rng) ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace revstream::synthetic
