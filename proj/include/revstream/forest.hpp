#pragma once

// Adaptive random forest: Hoeffding members on Poisson-weighted copies of the stream,
// random feature subsets per leaf, and ADWIN warning/drift monitors with background trees.

#include <memory>
#include <random>
#include <vector>

#include "revstream/detectors.hpp"
#include "revstream/hoeffding.hpp"

namespace revstream::learners {

struct ForestParams {
  TreeParams tree;
  std::size_t n_trees = 10;
  double lambda = 6.0;
  double warning_delta = 0.01;
  double drift_delta = 0.001;
  std::uint64_t seed = 1;
};

class AdaptiveRandomForest {
 public:
  struct Member {
    HoeffdingTree tree;
    std::unique_ptr<HoeffdingTree> background;
    drift::Adwin warning;
    drift::Adwin drift;
    std::size_t replacements = 0;
  };

  explicit AdaptiveRandomForest(ForestParams p = {}) : p_(p), rng_(p.seed) {
    if (p_.n_trees == 0) throw InvalidArgument("forest: n_trees >= 1");
    p_.tree.random_subspace = true;
    for (std::size_t i = 0; i < p_.n_trees; ++i) members_.push_back(make_member());
  }

  /// Builds a forest from already-trained member trees (used by import and tests).
  AdaptiveRandomForest(ForestParams p, std::vector<HoeffdingTree> trees) : p_(p), rng_(p.seed) {
    p_.tree.random_subspace = true;
    p_.n_trees = trees.size();
    for (auto& t : trees)
      members_.push_back(Member{std::move(t), nullptr, drift::Adwin({.delta = p_.warning_delta}),
                                drift::Adwin({.delta = p_.drift_delta})});
  }

  const ForestParams& params() const noexcept { return p_; }
  const std::vector<Member>& members() const noexcept { return members_; }

  /// Proba is the mean of member distributions; the label is the majority of member
  /// labels with ties to nonspam, so it can disagree with argmax(proba).
  Prediction predict_proba_one(const FeatureVector& fv) const {
    Prediction out;
    out.proba = {0.0, 0.0};
    std::size_t spam_votes = 0;
    for (const auto& m : members_) {
      const auto pr = m.tree.predict_proba_one(fv);
      out.proba[0] += pr.proba[0];
      out.proba[1] += pr.proba[1];
      spam_votes += pr.label == Label::spam;
    }
    const double n = static_cast<double>(members_.size());
    out.proba[0] /= n;
    out.proba[1] /= n;
    out.label = 2 * spam_votes > members_.size() ? Label::spam : Label::nonspam;
    return out;
  }

  void learn_one(const FeatureVector& fv, Label y, double weight = 1.0) {
    std::poisson_distribution<int> poisson(p_.lambda);
    for (auto& m : members_) {
      const bool error = m.tree.predict_proba_one(fv).label != y;
      const int k = poisson(rng_);
      if (k > 0) {
        m.tree.learn_one(fv, y, weight * k);
        if (m.background) m.background->learn_one(fv, y, weight * k);
      }
      const double e = error ? 1.0 : 0.0;
      if (m.warning.update(e)) {
        m.background = std::make_unique<HoeffdingTree>(next_tree_params());
        m.warning = drift::Adwin({.delta = p_.warning_delta});
      }
      if (m.drift.update(e)) {
        m.tree = m.background ? std::move(*m.background) : HoeffdingTree(next_tree_params());
        m.background.reset();
        m.warning = drift::Adwin({.delta = p_.warning_delta});
        m.drift = drift::Adwin({.delta = p_.drift_delta});
        ++m.replacements;
      }
    }
  }

  std::size_t replacements() const noexcept {
    std::size_t n = 0;
    for (const auto& m : members_) n += m.replacements;
    return n;
  }

 private:
  TreeParams next_tree_params() {
    TreeParams t = p_.tree;
    t.seed = rng_();
    return t;
  }

  Member make_member() {
    return Member{HoeffdingTree(next_tree_params()), nullptr,
                  drift::Adwin({.delta = p_.warning_delta}),
                  drift::Adwin({.delta = p_.drift_delta})};
  }

  ForestParams p_;
  std::mt19937_64 rng_;
  std::vector<Member> members_;
};

}  // namespace revstream::learners
