#pragma once

// Error-rate drift detectors used as baselines: ADWIN and EDDM.

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "revstream/types.hpp"

namespace revstream::drift {

enum class DetectorState { normal, warning, drift };

inline const char* to_string(DetectorState s) {
  switch (s) {
    case DetectorState::normal: return "normal";
    case DetectorState::warning: return "warning";
    case DetectorState::drift: return "drift";
  }
  return "?";
}

/// ADWIN2 with an exponential histogram. Row r of the histogram holds up to
/// max_buckets + 1 buckets of 2^r elements each, newest at the back.
class Adwin {
 public:
  struct Config {
    double delta = 0.002;
    int clock = 32;
    int max_buckets = 5;
    std::uint64_t min_window_length = 5;  // per sub-window at a cut
    std::uint64_t min_width = 10;         // no checks below this width
  };

  Adwin() : Adwin(Config{}) {}
  explicit Adwin(Config cfg) : cfg_(cfg) {
    if (!(cfg_.delta > 0.0 && cfg_.delta < 1.0)) throw InvalidArgument("adwin: delta in (0,1)");
  }

  /// Adds one value; returns true when the window was cut.
  bool update(double value) {
    ++time_;
    insert(value);
    bool change = false;
    if (time_ % static_cast<std::uint64_t>(cfg_.clock) == 0 && width_ > cfg_.min_width) {
      bool reduce = true;
      while (reduce) {
        reduce = false;
        bool exit = false;
        double n0 = 0.0, n1 = static_cast<double>(width_);
        double u0 = 0.0, u1 = total_;
        for (std::size_t r = rows_.size(); r-- > 0 && !exit;) {
          const auto& row = rows_[r];
          const double size = std::ldexp(1.0, static_cast<int>(r));
          for (std::size_t b = 0; b < row.size(); ++b) {
            n0 += size;
            n1 -= size;
            u0 += row[b].total;
            u1 -= row[b].total;
            if (r == 0 && b + 1 == row.size()) {
              exit = true;
              break;
            }
            const double diff = u0 / n0 - u1 / n1;
            if (n1 >= static_cast<double>(cfg_.min_window_length) &&
                n0 >= static_cast<double>(cfg_.min_window_length) && cut(n0, n1, diff)) {
              reduce = true;
              change = true;
              if (width_ > 0) {
                drop_oldest();
                exit = true;
                break;
              }
            }
          }
        }
      }
    }
    if (change) ++detections_;
    return change;
  }

  DetectorState observe(double value) {
    return update(value) ? DetectorState::drift : DetectorState::normal;
  }

  std::uint64_t width() const noexcept { return width_; }
  double total() const noexcept { return total_; }
  double mean() const noexcept { return width_ == 0 ? 0.0 : total_ / static_cast<double>(width_); }
  double variance() const noexcept {
    return width_ == 0 ? 0.0 : variance_ / static_cast<double>(width_);
  }
  std::uint64_t detections() const noexcept { return detections_; }
  std::size_t bucket_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

 private:
  struct Bucket {
    double total;
    double variance;
  };

  bool cut(double n0, double n1, double diff) const {
    const double n = static_cast<double>(width_);
    const double dd = std::log(2.0 * std::log(n) / cfg_.delta);
    const double v = variance();
    const double mw = static_cast<double>(cfg_.min_window_length);
    const double m = 1.0 / (n0 - mw + 1.0) + 1.0 / (n1 - mw + 1.0);
    const double eps = std::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
    return std::abs(diff) > eps;
  }

  void insert(double value) {
    ++width_;
    if (rows_.empty()) rows_.emplace_back();
    rows_[0].push_back({value, 0.0});
    if (width_ > 1) {
      const double w = static_cast<double>(width_);
      const double d = value - total_ / (w - 1.0);
      variance_ += (w - 1.0) * d * d / w;
    }
    total_ += value;
    compress();
  }

  void compress() {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (rows_[r].size() != static_cast<std::size_t>(cfg_.max_buckets) + 1) break;
      if (r + 1 == rows_.size()) rows_.emplace_back();
      const double size = std::ldexp(1.0, static_cast<int>(r));
      const Bucket a = rows_[r][0], b = rows_[r][1];
      const double ua = a.total / size, ub = b.total / size;
      const double inc = size * size * (ua - ub) * (ua - ub) / (2.0 * size);
      rows_[r + 1].push_back({a.total + b.total, a.variance + b.variance + inc});
      rows_[r].pop_front();
      rows_[r].pop_front();
      if (rows_[r + 1].size() <= static_cast<std::size_t>(cfg_.max_buckets)) break;
    }
  }

  void drop_oldest() {
    auto& row = rows_.back();
    const double n1 = std::ldexp(1.0, static_cast<int>(rows_.size() - 1));
    const Bucket b = row.front();
    width_ -= static_cast<std::uint64_t>(n1);
    total_ -= b.total;
    const double w = static_cast<double>(width_);
    const double u1 = b.total / n1;
    double inc = b.variance;
    if (width_ > 0) {
      const double d = u1 - total_ / w;
      inc += n1 * w * d * d / (n1 + w);
    }
    variance_ -= inc;
    row.pop_front();
    if (row.empty()) rows_.pop_back();
  }

  Config cfg_;
  std::vector<std::deque<Bucket>> rows_;
  std::uint64_t time_ = 0;
  std::uint64_t width_ = 0;
  double total_ = 0.0;
  double variance_ = 0.0;
  std::uint64_t detections_ = 0;
};

/// Early Drift Detection Method over the misclassification indicator stream.
/// Tracks the mean and spread of distances between consecutive errors; the running
/// maximum of mean + 2 std is the reference.
class Eddm {
 public:
  struct Config {
    double warning = 0.95;
    double drift = 0.9;
    std::uint64_t min_instances = 30;
    std::uint64_t min_errors = 30;
  };

  Eddm() : Eddm(Config{}) {}
  explicit Eddm(Config cfg) : cfg_(cfg) {}

  /// `error` is true for a misclassified sample. State resets after a drift.
  DetectorState observe(bool error) {
    ++n_;
    if (!error) return DetectorState::normal;
    ++errors_;
    last_d_ = d_;
    d_ = n_ - 1;
    const double distance = static_cast<double>(d_ - last_d_);
    const double old_mean = mean_;
    mean_ += (distance - mean_) / static_cast<double>(errors_);
    std_temp_ += (distance - mean_) * (distance - old_mean);
    const double sd = std::sqrt(std_temp_ / static_cast<double>(errors_));
    const double m2s = mean_ + 2.0 * sd;
    if (n_ < cfg_.min_instances) return DetectorState::normal;
    if (m2s > m2s_max_) {
      if (errors_ > cfg_.min_errors) m2s_max_ = m2s;
      return DetectorState::normal;
    }
    const double ratio = m2s / m2s_max_;
    if (errors_ > cfg_.min_errors && ratio < cfg_.drift) {
      ++detections_;
      reset();
      return DetectorState::drift;
    }
    if (errors_ > cfg_.min_errors && ratio < cfg_.warning) return DetectorState::warning;
    return DetectorState::normal;
  }

  void reset() {
    n_ = 1;
    errors_ = 0;
    d_ = 0;
    last_d_ = 0;
    mean_ = 0.0;
    std_temp_ = 0.0;
    m2s_max_ = 0.0;
  }

  std::uint64_t errors() const noexcept { return errors_; }
  double mean_distance() const noexcept { return mean_; }
  double m2s_max() const noexcept { return m2s_max_; }
  std::uint64_t detections() const noexcept { return detections_; }

 private:
  Config cfg_;
  std::uint64_t n_ = 1;
  std::uint64_t errors_ = 0;
  std::uint64_t d_ = 0;
  std::uint64_t last_d_ = 0;
  double mean_ = 0.0;
  double std_temp_ = 0.0;
  double m2s_max_ = 0.0;
  std::uint64_t detections_ = 0;
};

}  // namespace revstream::drift
