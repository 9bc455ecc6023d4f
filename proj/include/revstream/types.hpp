#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace revstream {

// Class order is significant: argmax and vote ties resolve to the lower index.
enum class Label : std::uint8_t { nonspam = 0, spam = 1 };

inline constexpr std::size_t kNumClasses = 2;

inline constexpr std::string_view to_string(Label l) noexcept {
  return l == Label::spam ? "spam" : "nonspam";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "spam" || s == "1") return Label::spam;
  if (s == "nonspam" || s == "0" || s == "ham") return Label::nonspam;
  return std::nullopt;
}

inline constexpr Label other(Label l) noexcept {
  return l == Label::spam ? Label::nonspam : Label::spam;
}

inline constexpr std::size_t index_of(Label l) noexcept { return static_cast<std::size_t>(l); }

/// One review (or wiki revision) as it arrives on the stream.
struct RawEvent {
  std::string event_id;
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;  // UTC seconds
  std::string text;
  std::optional<int> rating;    // 1..5 when present
  std::optional<Label> label;   // ground truth; absent for unlabeled live traffic
  std::map<std::string, double> extra;  // numeric passthrough columns
};

/// Named numeric features. Ordered so iteration (and everything built on it) is deterministic.
using FeatureVector = std::map<std::string, double>;

/// Sparse gram -> count row.
using WordGramRow = std::map<std::string, double>;

/// Class-indexed probabilities / counts.
using ClassArray = std::array<double, kNumClasses>;

struct Prediction {
  Label label = Label::nonspam;
  ClassArray proba{0.5, 0.5};

  double confidence() const noexcept { return proba[0] > proba[1] ? proba[0] : proba[1]; }
  double proba_of(Label l) const noexcept { return proba[index_of(l)]; }
};

inline Label argmax(const ClassArray& a) noexcept {
  return a[1] > a[0] ? Label::spam : Label::nonspam;
}

inline bool is_valid_rating(int r) noexcept { return r >= 1 && r <= 5; }

/// Thrown for contract violations on inputs (NaN observations, bad parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace revstream
