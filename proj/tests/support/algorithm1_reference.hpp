#pragma once

// Straight-line transcription of the two-window drift procedure, kept deliberately
// naive: dense rows, window sums recomputed from scratch, textbook expected counts.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace reference {

using DenseRow = std::vector<double>;

inline double textbook_chi2_pvalue(const DenseRow& x, const DenseRow& y) {
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] >= 6 || y[j] >= 6) keep.push_back(j);
  double rx = 0, ry = 0;
  for (auto j : keep) {
    rx += x[j];
    ry += y[j];
  }
  if (keep.size() < 2 || rx == 0 || ry == 0) return 1.0;
  const double grand = rx + ry;
  double stat = 0;
  for (auto j : keep) {
    const double col = x[j] + y[j];
    const double ex = rx * col / grand, ey = ry * col / grand;
    stat += (x[j] - ex) * (x[j] - ex) / ex + (y[j] - ey) * (y[j] - ey) / ey;
  }
  return boost::math::gamma_q((keep.size() - 1) / 2.0, stat / 2.0);
}

struct Step {
  double p_value;
  double aad;
  double acc_p;
  bool drift;
  std::size_t ca_len;
  std::size_t p_len;
};

class Algorithm1 {
 public:
  Algorithm1(std::size_t n, std::size_t w_max) : n_(n), w_max_(w_max) {}

  Step step(const DenseRow& wordgrams, int actual, int predicted) {
    if (k_ < n_) P_.push_back(wordgrams);
    CA_.push_back(wordgrams);
    if (CA_.size() > w_max_) CA_.erase(CA_.begin());
    double p_value = 0, aad = 0;
    bool drift = false;
    ++k_;
    if (k_ == n_) acc_p_ = accuracy(list_actual_.size());
    if (k_ >= n_) {
      p_value = textbook_chi2_pvalue(sum(CA_), sum(P_));
      const double acc_ca = accuracy(CA_.size());
      aad = std::abs(acc_p_ - acc_ca);
      if (p_value <= 0.1) drop_front(2);
      if (p_value > 0.1 && p_value < 0.5) drop_front(1);
      if (p_value <= 0.05 && aad >= 0.05) {
        P_ = CA_;
        acc_p_ = accuracy(P_.size());
        drift = true;
      }
    }
    list_actual_.push_back(actual);
    list_predicted_.push_back(predicted);
    return {p_value, aad, acc_p_, drift, CA_.size(), P_.size()};
  }

 private:
  DenseRow sum(const std::vector<DenseRow>& rows) const {
    DenseRow out(rows.empty() ? 0 : rows.front().size(), 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
    return out;
  }

  double accuracy(std::size_t last) const {
    const std::size_t m = std::min(last, list_actual_.size());
    if (m == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = list_actual_.size() - m; i < list_actual_.size(); ++i)
      hits += list_actual_[i] == list_predicted_[i];
    return static_cast<double>(hits) / m;
  }

  void drop_front(std::size_t count) {
    const std::size_t drop = std::min(count, CA_.size() - 1);
    CA_.erase(CA_.begin(), CA_.begin() + drop);
  }

  std::size_t n_, w_max_;
  std::vector<DenseRow> P_, CA_;
  std::vector<int> list_actual_, list_predicted_;
  double acc_p_ = 0;
  std::size_t k_ = 0;
};

}  // namespace reference
