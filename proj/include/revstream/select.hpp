#pragma once

// Streaming variance-threshold feature selection.

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "revstream/log.hpp"
#include "revstream/types.hpp"

namespace revstream::select {

/// Welford accumulator; variance() is the population variance M2 / count.
struct RunningMoments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void observe(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double variance() const noexcept {
    return count == 0 ? 0.0 : std::max(0.0, m2 / static_cast<double>(count));
  }
};

/// Keys starting with this prefix bypass selection.
inline constexpr std::string_view kWordGramPrefix = "wg:";

inline bool is_wordgram_key(std::string_view key) { return key.starts_with(kWordGramPrefix); }

class RunningVariance {
 public:
  void observe(const FeatureVector& fv) {
    for (const auto& [key, value] : fv) {
      if (is_wordgram_key(key)) continue;
      if (std::isnan(value)) {
        log::warn("variance: NaN value for '" + key + "' rejected");
        continue;
      }
      moments_[key].observe(value);
    }
  }

  double variance(const std::string& key) const {
    auto it = moments_.find(key);
    return it == moments_.end() ? 0.0 : it->second.variance();
  }

  /// Keys whose variance is strictly greater than `threshold`.
  std::set<std::string> selected(double threshold = 0.0) const {
    std::set<std::string> out;
    for (const auto& [key, m] : moments_)
      if (m.variance() > threshold) out.insert(key);
    return out;
  }

  std::size_t size() const noexcept { return moments_.size(); }
  const std::map<std::string, RunningMoments>& moments() const noexcept { return moments_; }

 private:
  std::map<std::string, RunningMoments> moments_;
};

/// Restricts `fv` to the selected keys plus every word-gram key.
inline FeatureVector apply_selection(const FeatureVector& fv, const std::set<std::string>& keep) {
  FeatureVector out;
  for (const auto& [key, value] : fv)
    if (is_wordgram_key(key) || keep.count(key)) out.emplace_hint(out.end(), key, value);
  return out;
}

}  // namespace revstream::select
