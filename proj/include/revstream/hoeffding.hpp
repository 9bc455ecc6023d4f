#pragma once

// Hoeffding trees over named numeric features: the plain tree and the adaptive
// variant with per-node ADWIN error monitors and alternate subtrees.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "revstream/detectors.hpp"
#include "revstream/log.hpp"
#include "revstream/types.hpp"

namespace revstream::learners {

using nlohmann::json;

inline double hoeffding_bound(double range, double delta, double n) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("hoeffding_bound: delta in (0,1]");
  if (!(n >= 1.0)) throw InvalidArgument("hoeffding_bound: n >= 1");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

enum class LeafMode { majority, naive_bayes_adaptive };

inline const char* to_string(LeafMode m) {
  return m == LeafMode::majority ? "majority" : "nba";
}

inline LeafMode parse_leaf_mode(const std::string& s) {
  if (s == "majority" || s == "mc") return LeafMode::majority;
  if (s == "nba" || s == "naive_bayes_adaptive") return LeafMode::naive_bayes_adaptive;
  throw InvalidArgument("unknown leaf mode '" + s + "'");
}

struct TreeParams {
  double grace_period = 200;
  double delta = 1e-7;  // split confidence
  double tau = 0.05;    // tie threshold
  LeafMode leaf_mode = LeafMode::naive_bayes_adaptive;
  int n_candidates = 10;             // thresholds tried per feature
  double min_branch_fraction = 0.01;
  bool random_subspace = false;      // each leaf watches a random subset of features
  std::size_t subspace_size = 0;     // subset size; 0 means floor(sqrt(n)) + 1
  bool adaptive = false;             // alternate subtrees on error increase
  std::uint64_t seed = 1;
};

inline constexpr double kLaplace = 1.0;

inline ClassArray laplace(const ClassArray& counts) {
  const double total = counts[0] + counts[1] + kLaplace * kNumClasses;
  return {(counts[0] + kLaplace) / total, (counts[1] + kLaplace) / total};
}

/// Weighted Gaussian summary of one feature for one class.
struct Gaussian {
  double weight = 0.0;
  double mean = 0.0;
  double var_sum = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double v, double w) {
    if (weight > 0.0) {
      weight += w;
      const double last = mean;
      mean += w * (v - last) / weight;
      var_sum += w * (v - last) * (v - mean);
    } else {
      mean = v;
      weight = w;
    }
    min = std::min(min, v);
    max = std::max(max, v);
  }
  double variance() const noexcept { return weight > 1.0 ? var_sum / (weight - 1.0) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double pdf(double v) const noexcept {
    if (weight <= 0.0) return 0.0;
    const double sd = stddev();
    if (sd > 0.0) {
      const double z = (v - mean) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    }
    return v == mean ? 1.0 : 0.0;
  }
  /// Estimated weight at or below `v`.
  double weight_at_or_below(double v) const noexcept {
    if (weight <= 0.0 || v < min) return 0.0;
    if (v >= max) return weight;
    const double sd = stddev();
    if (sd > 0.0) return weight * 0.5 * std::erfc(-(v - mean) / (sd * std::sqrt(2.0)));
    return v >= mean ? weight : 0.0;
  }
};

inline void to_json(json& j, const Gaussian& g) {
  j = json::array({g.weight, g.mean, g.var_sum, g.weight > 0 ? g.min : 0.0,
                   g.weight > 0 ? g.max : 0.0});
}

inline void from_json(const json& j, Gaussian& g) {
  g.weight = j.at(0).get<double>();
  g.mean = j.at(1).get<double>();
  g.var_sum = j.at(2).get<double>();
  if (g.weight > 0) {
    g.min = j.at(3).get<double>();
    g.max = j.at(4).get<double>();
  }
}

using ClassGaussians = std::array<Gaussian, kNumClasses>;

struct Node {
  int id = 0;
  // split nodes: x[feature] <= threshold goes left
  std::string feature;
  double threshold = 0.0;
  std::unique_ptr<Node> left, right;
  // leaves
  ClassArray counts{0.0, 0.0};
  std::map<std::string, ClassGaussians> estimators;
  double weight_at_last_eval = 0.0;
  double mc_correct = 0.0;
  double nb_correct = 0.0;
  std::vector<std::string> subspace;
  bool subspace_sampled = false;
  // adaptive trees
  std::unique_ptr<drift::Adwin> monitor;
  std::unique_ptr<Node> alternate;

  bool is_leaf() const noexcept { return !left; }
  double weight() const noexcept { return counts[0] + counts[1]; }
};

/// Missing features read as 0.
inline double feature_value(const FeatureVector& fv, const std::string& key) {
  auto it = fv.find(key);
  return it == fv.end() ? 0.0 : it->second;
}

struct PathStep {
  int node_id = 0;
  std::string feature;
  double threshold = 0.0;
  double value = 0.0;
  bool greater = false;  // took the x > threshold branch
};

struct SplitCandidate {
  std::string feature;
  double threshold = 0.0;
  double merit = 0.0;
  ClassArray left{0, 0}, right{0, 0};
};

inline double entropy(const ClassArray& d) {
  const double total = d[0] + d[1];
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : d)
    if (c > 0.0) h -= c / total * std::log2(c / total);
  return h;
}

/// Information gain of a binary split; -inf unless both branches carry at least
/// `min_fraction` of the weight.
inline double info_gain(const ClassArray& pre, const ClassArray& l, const ClassArray& r,
                        double min_fraction) {
  const double wl = l[0] + l[1], wr = r[0] + r[1], total = wl + wr;
  if (total <= 0.0 || wl / total < min_fraction || wr / total < min_fraction)
    return -std::numeric_limits<double>::infinity();
  return entropy(pre) - (wl / total * entropy(l) + wr / total * entropy(r));
}

class HoeffdingTree {
 public:
  explicit HoeffdingTree(TreeParams p = {}) : p_(p), rng_(p.seed) { root_ = new_leaf(); }

  HoeffdingTree(const HoeffdingTree&) = delete;
  HoeffdingTree& operator=(const HoeffdingTree&) = delete;
  HoeffdingTree(HoeffdingTree&&) = default;
  HoeffdingTree& operator=(HoeffdingTree&&) = default;

  const TreeParams& params() const noexcept { return p_; }
  const Node& root() const noexcept { return *root_; }

  Prediction predict_proba_one(const FeatureVector& fv) const {
    return predict_at(leaf_for(*root_, fv), fv);
  }

  const Node& leaf_for(const FeatureVector& fv) const { return leaf_for(*root_, fv); }

  std::vector<PathStep> decision_path(const FeatureVector& fv, int* leaf_id = nullptr) const {
    std::vector<PathStep> steps;
    const Node* n = root_.get();
    while (!n->is_leaf()) {
      const double v = feature_value(fv, n->feature);
      steps.push_back({n->id, n->feature, n->threshold, v, v > n->threshold});
      n = v <= n->threshold ? n->left.get() : n->right.get();
    }
    if (leaf_id) *leaf_id = n->id;
    return steps;
  }

  void learn_one(const FeatureVector& fv, Label y, double weight = 1.0) {
    if (!(weight > 0.0)) return;
    ++samples_;
    if (p_.adaptive)
      learn_adaptive(root_, fv, y, weight);
    else
      learn_leaf(mutable_leaf(fv), fv, y, weight);
  }

  std::size_t node_count() const { return count(*root_, false); }
  std::size_t leaf_count() const { return count(*root_, true); }
  std::size_t depth() const { return depth(*root_); }
  std::uint64_t samples() const noexcept { return samples_; }
  std::size_t alternate_swaps() const noexcept { return swaps_; }

  json to_json() const {
    json nodes = json::array();
    write(*root_, nodes);
    return {{"root", root_->id}, {"nodes", std::move(nodes)}};
  }

  static HoeffdingTree from_json(const json& j, TreeParams p) {
    HoeffdingTree t(p);
    std::map<int, const json*> by_id;
    int max_id = 0;
    for (const auto& n : j.at("nodes")) {
      by_id[n.at("id").get<int>()] = &n;
      max_id = std::max(max_id, n.at("id").get<int>());
    }
    t.root_ = t.read(j.at("root").get<int>(), by_id);
    t.next_id_ = max_id + 1;
    return t;
  }

 private:
  std::unique_ptr<Node> new_leaf(ClassArray counts = {0.0, 0.0}) {
    auto n = std::make_unique<Node>();
    n->id = next_id_++;
    n->counts = counts;
    n->weight_at_last_eval = counts[0] + counts[1];
    if (p_.adaptive) n->monitor = std::make_unique<drift::Adwin>();
    return n;
  }

  static const Node& leaf_for(const Node& start, const FeatureVector& fv) {
    const Node* n = &start;
    while (!n->is_leaf())
      n = feature_value(fv, n->feature) <= n->threshold ? n->left.get() : n->right.get();
    return *n;
  }

  Node& mutable_leaf(const FeatureVector& fv) {
    Node* n = root_.get();
    while (!n->is_leaf())
      n = feature_value(fv, n->feature) <= n->threshold ? n->left.get() : n->right.get();
    return *n;
  }

  static ClassArray naive_bayes(const Node& leaf, const FeatureVector& fv) {
    const double total = leaf.weight();
    if (total <= 0.0) return {0.5, 0.5};
    std::array<double, kNumClasses> logp{};
    const auto prior = laplace(leaf.counts);
    for (std::size_t c = 0; c < kNumClasses; ++c) logp[c] = std::log(prior[c]);
    for (const auto& [key, g] : leaf.estimators) {
      const double v = feature_value(fv, key);
      for (std::size_t c = 0; c < kNumClasses; ++c)
        if (g[c].weight > 0.0) logp[c] += std::log(std::max(g[c].pdf(v), 1e-300));
    }
    const double m = std::max(logp[0], logp[1]);
    ClassArray out{std::exp(logp[0] - m), std::exp(logp[1] - m)};
    const double s = out[0] + out[1];
    return {out[0] / s, out[1] / s};
  }

  Prediction predict_at(const Node& leaf, const FeatureVector& fv) const {
    Prediction pr;
    const bool use_nb =
        p_.leaf_mode == LeafMode::naive_bayes_adaptive && leaf.nb_correct >= leaf.mc_correct &&
        !leaf.estimators.empty();
    pr.proba = use_nb ? naive_bayes(leaf, fv) : laplace(leaf.counts);
    pr.label = argmax(pr.proba);
    return pr;
  }

  void sample_subspace(Node& leaf, const FeatureVector& fv) {
    leaf.subspace_sampled = true;
    if (!p_.random_subspace) return;
    std::vector<std::string> keys;
    for (const auto& [k, _] : fv) keys.push_back(k);
    const std::size_t m = std::min(
        p_.subspace_size > 0
            ? p_.subspace_size
            : static_cast<std::size_t>(std::sqrt(static_cast<double>(keys.size()))) + 1,
        keys.size());
    std::vector<std::string> chosen;
    std::sample(keys.begin(), keys.end(), std::back_inserter(chosen), m, rng_);
    leaf.subspace = std::move(chosen);
  }

  void observe_feature(Node& leaf, const std::string& key, double v, Label y, double w) {
    if (std::isnan(v)) {
      log::warn("hoeffding: NaN value for '" + key + "' skipped");
      return;
    }
    leaf.estimators[key][index_of(y)].add(v, w);
  }

  void learn_leaf(Node& leaf, const FeatureVector& fv, Label y, double w) {
    if (p_.leaf_mode == LeafMode::naive_bayes_adaptive) {
      if (argmax(leaf.counts) == y) leaf.mc_correct += w;
      if (argmax(naive_bayes(leaf, fv)) == y) leaf.nb_correct += w;
    }
    leaf.counts[index_of(y)] += w;
    if (!leaf.subspace_sampled) sample_subspace(leaf, fv);
    if (p_.random_subspace) {
      for (const auto& key : leaf.subspace) observe_feature(leaf, key, feature_value(fv, key), y, w);
    } else {
      // union of known and incoming keys, missing values as 0
      auto ie = leaf.estimators.begin();
      auto ix = fv.begin();
      while (ie != leaf.estimators.end() || ix != fv.end()) {
        if (ix == fv.end() || (ie != leaf.estimators.end() && ie->first < ix->first)) {
          ie->second[index_of(y)].add(0.0, w);
          ++ie;
        } else if (ie == leaf.estimators.end() || ix->first < ie->first) {
          observe_feature(leaf, ix->first, ix->second, y, w);
          ++ix;
        } else {
          observe_feature(leaf, ix->first, ix->second, y, w);
          ++ie;
          ++ix;
        }
      }
    }
    const double seen = leaf.weight();
    if (seen - leaf.weight_at_last_eval >= p_.grace_period) {
      if (leaf.counts[0] > 0.0 && leaf.counts[1] > 0.0) attempt_split(leaf);
      leaf.weight_at_last_eval = seen;
    }
  }

  std::vector<SplitCandidate> candidates(const Node& leaf) const {
    std::vector<SplitCandidate> out;
    for (const auto& [key, g] : leaf.estimators) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& gc : g)
        if (gc.weight > 0.0) {
          lo = std::min(lo, gc.min);
          hi = std::max(hi, gc.max);
        }
      if (!(hi > lo)) continue;
      SplitCandidate best{key, 0.0, -std::numeric_limits<double>::infinity(), {}, {}};
      for (int i = 0; i < p_.n_candidates; ++i) {
        const double t = lo + (hi - lo) * (i + 1) / (p_.n_candidates + 1);
        ClassArray l{}, r{};
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          l[c] = g[c].weight_at_or_below(t);
          r[c] = g[c].weight - l[c];
        }
        const double merit = info_gain(leaf.counts, l, r, p_.min_branch_fraction);
        if (merit > best.merit) best = {key, t, merit, l, r};
      }
      if (std::isfinite(best.merit)) out.push_back(std::move(best));
    }
    return out;
  }

  void attempt_split(Node& leaf) {
    auto cands = candidates(leaf);
    if (cands.empty()) return;
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.merit > b.merit; });
    const double best = cands[0].merit;
    const double second = cands.size() > 1 ? std::max(cands[1].merit, 0.0) : 0.0;
    const double eps = hoeffding_bound(1.0, p_.delta, leaf.weight());
    if (best <= 0.0 || !(best - second > eps || eps < p_.tau)) return;
    leaf.feature = cands[0].feature;
    leaf.threshold = cands[0].threshold;
    leaf.left = new_leaf(cands[0].left);
    leaf.right = new_leaf(cands[0].right);
    leaf.estimators.clear();
    leaf.subspace.clear();
    if (p_.adaptive) leaf.monitor = std::make_unique<drift::Adwin>();
  }

  void learn_adaptive(std::unique_ptr<Node>& slot, const FeatureVector& fv, Label y, double w) {
    Node& n = *slot;
    const bool error = predict_at(leaf_for(n, fv), fv).label != y;
    const double old_error = n.monitor->mean();
    const bool change = n.monitor->update(error ? 1.0 : 0.0);
    if (!n.is_leaf()) {
      if (change && n.monitor->mean() > old_error) {
        n.alternate = new_leaf();
      } else if (n.alternate && n.alternate->monitor->width() > 300 && n.monitor->width() > 300) {
        const double own = n.monitor->mean(), alt = n.alternate->monitor->mean();
        const double inv_n = 1.0 / static_cast<double>(n.alternate->monitor->width()) +
                             1.0 / static_cast<double>(n.monitor->width());
        const double bound = std::sqrt(2.0 * own * (1.0 - own) * std::log(2.0 / 0.05) * inv_n);
        if (bound < own - alt) {
          std::unique_ptr<Node> alt_tree = std::move(n.alternate);
          slot = std::move(alt_tree);
          ++swaps_;
          learn_adaptive(slot, fv, y, w);
          return;
        }
        if (bound < alt - own) n.alternate.reset();
      }
      if (n.alternate) learn_adaptive(n.alternate, fv, y, w);
      auto& child = feature_value(fv, n.feature) <= n.threshold ? n.left : n.right;
      learn_adaptive(child, fv, y, w);
    } else {
      learn_leaf(n, fv, y, w);
    }
  }

  static std::size_t count(const Node& n, bool leaves_only) {
    if (n.is_leaf()) return 1;
    return (leaves_only ? 0 : 1) + count(*n.left, leaves_only) + count(*n.right, leaves_only);
  }
  static std::size_t depth(const Node& n) {
    return n.is_leaf() ? 0 : 1 + std::max(depth(*n.left), depth(*n.right));
  }

  static void write(const Node& n, json& out) {
    if (n.is_leaf()) {
      json est = json::object();
      for (const auto& [k, g] : n.estimators) est[k] = json::array({g[0], g[1]});
      out.push_back({{"id", n.id},
                     {"leaf", true},
                     {"counts", n.counts},
                     {"weight_at_last_eval", n.weight_at_last_eval},
                     {"mc_correct", n.mc_correct},
                     {"nb_correct", n.nb_correct},
                     {"subspace", n.subspace},
                     {"estimators", std::move(est)}});
      return;
    }
    out.push_back({{"id", n.id},
                   {"leaf", false},
                   {"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left->id},
                   {"right", n.right->id}});
    write(*n.left, out);
    write(*n.right, out);
  }

  std::unique_ptr<Node> read(int id, const std::map<int, const json*>& by_id) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("tree json: missing node " + std::to_string(id));
    const json& j = *it->second;
    auto n = std::make_unique<Node>();
    n->id = id;
    if (p_.adaptive) n->monitor = std::make_unique<drift::Adwin>();
    if (j.at("leaf").get<bool>()) {
      n->counts = j.at("counts").get<ClassArray>();
      n->weight_at_last_eval = j.value("weight_at_last_eval", n->weight());
      n->mc_correct = j.value("mc_correct", 0.0);
      n->nb_correct = j.value("nb_correct", 0.0);
      n->subspace = j.value("subspace", std::vector<std::string>{});
      n->subspace_sampled = !n->subspace.empty() || n->weight() > 0.0;
      const json est = j.value("estimators", json::object());
      for (const auto& [k, g] : est.items())
        n->estimators[k] = {g.at(0).get<Gaussian>(), g.at(1).get<Gaussian>()};
    } else {
      n->feature = j.at("feature").get<std::string>();
      n->threshold = j.at("threshold").get<double>();
      n->left = read(j.at("left").get<int>(), by_id);
      n->right = read(j.at("right").get<int>(), by_id);
    }
    return n;
  }

  TreeParams p_;
  std::mt19937_64 rng_;
  int next_id_ = 0;
  std::unique_ptr<Node> root_;
  std::uint64_t samples_ = 0;
  std::size_t swaps_ = 0;
};

}  // namespace revstream::learners
