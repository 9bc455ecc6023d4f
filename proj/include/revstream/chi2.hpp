#pragma once

// Pearson chi-square homogeneity test between two sparse gram-frequency vectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "revstream/log.hpp"
#include "revstream/types.hpp"

namespace revstream::drift {

using FrequencyVector = std::map<std::string, double>;

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series expansion of P for x < a + 1, Lentz continued fraction for Q otherwise.
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x))
    throw InvalidArgument("regularized_gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefactor), 0.0, 1.0);
  }
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::clamp(std::exp(log_prefactor) * h, 0.0, 1.0);
}

/// Chi-square survival function.
inline double chi2_sf(double statistic, double dof) {
  return regularized_gamma_q(dof / 2.0, statistic / 2.0);
}

struct Chi2Result {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t columns = 0;  // surviving columns
  bool defined = false;     // false when fewer than two columns or a zero marginal
};

inline constexpr double kMinColumnCount = 6.0;

/// Aligns both vectors on the union of grams, drops columns whose count is below 6 in
/// both, and tests homogeneity of the resulting 2 x V table with V - 1 degrees of
/// freedom. Undefined tables report p = 1.
inline Chi2Result chi2_test(const FrequencyVector& a, const FrequencyVector& b,
                            double min_count = kMinColumnCount) {
  std::vector<std::pair<double, double>> cols;
  auto ia = a.begin(), ib = b.begin();
  auto keep = [&](double x, double y) {
    if (x >= min_count || y >= min_count) cols.emplace_back(x, y);
  };
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      keep(ia->second, 0.0);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      keep(0.0, ib->second);
      ++ib;
    } else {
      keep(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  Chi2Result r;
  r.columns = cols.size();
  double total_a = 0.0, total_b = 0.0;
  for (auto [x, y] : cols) {
    total_a += x;
    total_b += y;
  }
  if (cols.size() < 2 || total_a <= 0.0 || total_b <= 0.0) {
    log::debug("chi2: undefined table (" + std::to_string(cols.size()) +
               " columns); p defined as 1");
    return r;
  }
  // For a 2 x V table sum (O - E)^2 / E reduces to sum (a_j B - b_j A)^2 / (c_j A B),
  // which is exactly symmetric in the two rows.
  const double ab = total_a * total_b;
  double stat = 0.0;
  for (auto [x, y] : cols) {
    const double d = x * total_b - y * total_a;
    stat += d * d / ((x + y) * ab);
  }
  r.statistic = stat;
  r.p_value = chi2_sf(stat, static_cast<double>(cols.size() - 1));
  r.defined = true;
  return r;
}

inline double chi2_pvalue(const FrequencyVector& a, const FrequencyVector& b) {
  return chi2_test(a, b).p_value;
}

/// Column sums over window rows.
template <typename Range>
FrequencyVector sum_wordgrams(const Range& rows) {
  FrequencyVector out;
  for (const auto& row : rows)
    for (const auto& [gram, count] : row) out[gram] += count;
  return out;
}

}  // namespace revstream::drift
