#pragma once

// Prequential classification metrics.

#include <array>
#include <cstdint>

#include "json.hpp"
#include "revstream/types.hpp"

namespace revstream::eval {

/// Counts indexed [actual][predicted].
struct Confusion {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(Label actual, Label predicted) { ++counts[index_of(actual)][index_of(predicted)]; }
  std::uint64_t at(Label actual, Label predicted) const {
    return counts[index_of(actual)][index_of(predicted)];
  }
  std::uint64_t total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  std::uint64_t correct() const noexcept { return counts[0][0] + counts[1][1]; }
  Confusion& operator+=(const Confusion& o) {
    for (std::size_t a = 0; a < kNumClasses; ++a)
      for (std::size_t p = 0; p < kNumClasses; ++p) counts[a][p] += o.counts[a][p];
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

inline double accuracy(const Confusion& c) {
  return c.total() == 0 ? 0.0 : static_cast<double>(c.correct()) / static_cast<double>(c.total());
}

/// F-measure of one class taken as positive; 0 when precision + recall is 0.
inline double f_measure(const Confusion& c, Label cls) {
  const double tp = static_cast<double>(c.at(cls, cls));
  const double fp = static_cast<double>(c.at(other(cls), cls));
  const double fn = static_cast<double>(c.at(cls, other(cls)));
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

inline double macro_f(const Confusion& c) {
  return (f_measure(c, Label::nonspam) + f_measure(c, Label::spam)) / 2.0;
}

struct MetricsSummary {
  std::uint64_t samples = 0;
  double accuracy = 0.0;
  double f_nonspam = 0.0;
  double f_spam = 0.0;
  double macro_f = 0.0;
};

inline MetricsSummary summarize(const Confusion& c) {
  return {c.total(), accuracy(c), f_measure(c, Label::nonspam), f_measure(c, Label::spam),
          macro_f(c)};
}

inline void to_json(nlohmann::json& j, const Confusion& c) {
  j = nlohmann::json{{"tn", c.counts[0][0]}, {"fp", c.counts[0][1]},
                     {"fn", c.counts[1][0]}, {"tp", c.counts[1][1]}};
}

inline void from_json(const nlohmann::json& j, Confusion& c) {
  c.counts[0][0] = j.at("tn").get<std::uint64_t>();
  c.counts[0][1] = j.at("fp").get<std::uint64_t>();
  c.counts[1][0] = j.at("fn").get<std::uint64_t>();
  c.counts[1][1] = j.at("tp").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const MetricsSummary& m) {
  j = nlohmann::json{{"samples", m.samples},   {"accuracy", m.accuracy}, {"f_nonspam", m.f_nonspam},
                     {"f_spam", m.f_spam},     {"macro_f", m.macro_f}};
}

inline void from_json(const nlohmann::json& j, MetricsSummary& m) {
  m.samples = j.at("samples").get<std::uint64_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.f_nonspam = j.at("f_nonspam").get<double>();
  m.f_spam = j.at("f_spam").get<double>();
  m.macro_f = j.at("macro_f").get<double>();
}

}  // namespace revstream::eval
