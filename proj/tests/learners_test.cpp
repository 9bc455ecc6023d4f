#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "revstream/learners.hpp"

namespace ln = revstream::learners;
using revstream::FeatureVector;
using revstream::Label;
using revstream::Prediction;

namespace {

const ln::ModelKind kAllKinds[] = {ln::ModelKind::htc, ln::ModelKind::hatc, ln::ModelKind::arfc};

// label = [x > 0.5] with an irrelevant feature z
struct ThresholdStream {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> u{0.0, 1.0};
  bool flipped = false;
  explicit ThresholdStream(std::uint64_t seed) : rng(seed) {}
  std::pair<FeatureVector, Label> next() {
    FeatureVector fv{{"x", u(rng)}, {"z", u(rng)}};
    bool spam = fv["x"] > 0.5;
    if (flipped) spam = !spam;
    return {fv, spam ? Label::spam : Label::nonspam};
  }
};

double sum(const Prediction& p) { return p.proba[0] + p.proba[1]; }

}  // namespace

TEST(HoeffdingBound, Examples) {
  EXPECT_NEAR(ln::hoeffding_bound(1.0, std::exp(-2.0), 2), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(ln::hoeffding_bound(1.0, 1e-7, 400), ln::hoeffding_bound(1.0, 1e-7, 100) / 2, 1e-12);
  EXPECT_EQ(ln::hoeffding_bound(1.0, 1.0, 10), 0.0);
  EXPECT_THROW(ln::hoeffding_bound(1.0, 0.0, 10), revstream::InvalidArgument);
  EXPECT_THROW(ln::hoeffding_bound(1.0, 0.5, 0), revstream::InvalidArgument);
}

TEST(Gaussian, SplitWeightsFollowNormalCdf) {
  ln::Gaussian g;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(2.0, 0.5);
  for (int i = 0; i < 5000; ++i) g.add(n(rng), 1.0);
  EXPECT_NEAR(g.mean, 2.0, 0.03);
  EXPECT_NEAR(g.stddev(), 0.5, 0.03);
  EXPECT_NEAR(g.weight_at_or_below(2.0) / g.weight, 0.5, 0.02);
  EXPECT_NEAR(g.weight_at_or_below(2.5) / g.weight, 0.8413, 0.02);
  EXPECT_EQ(g.weight_at_or_below(g.min - 1), 0.0);
  EXPECT_EQ(g.weight_at_or_below(g.max), g.weight);
  ln::Gaussian point;
  point.add(3.0, 2.0);
  EXPECT_EQ(point.weight_at_or_below(2.9), 0.0);
  EXPECT_EQ(point.weight_at_or_below(3.0), 2.0);
}

TEST(Predict, EmptyModelsAreUniform) {
  for (auto kind : kAllKinds) {
    ln::OnlineModel m(kind);
    auto p = m.predict_proba_one({{"x", 1.0}});
    EXPECT_DOUBLE_EQ(p.proba[0], 0.5);
    EXPECT_DOUBLE_EQ(p.proba[1], 0.5);
    EXPECT_EQ(p.label, Label::nonspam);
  }
}

TEST(Predict, LaplaceSmoothedLeaf) {
  ln::OnlineModel m(ln::ModelKind::htc, {.leaf_mode = ln::LeafMode::majority});
  m.learn_one({{"x", 1.0}}, Label::spam);
  auto one = m.predict_proba_one({{"x", 1.0}});
  EXPECT_EQ(one.label, Label::spam);
  EXPECT_DOUBLE_EQ(one.proba_of(Label::spam), 2.0 / 3.0);
  m.learn_one({{"x", 2.0}}, Label::spam);
  m.learn_one({{"x", 3.0}}, Label::spam);
  m.learn_one({{"x", 4.0}}, Label::nonspam);
  auto p = m.predict_proba_one({{"x", 0.0}});
  EXPECT_DOUBLE_EQ(p.proba_of(Label::spam), 4.0 / 6.0);
  EXPECT_EQ(p.label, Label::spam);
}

TEST(Predict, ProbabilitiesAlwaysNormalised) {
  for (auto kind : kAllKinds) {
    ln::OnlineModel m(kind, {.grace_period = 50});
    ThresholdStream s(7);
    for (int i = 0; i < 2000; ++i) {
      auto [fv, y] = s.next();
      auto p = m.predict_proba_one(fv);
      ASSERT_NEAR(sum(p), 1.0, 1e-9);
      ASSERT_GE(p.proba[0], 0.0);
      ASSERT_GE(p.proba[1], 0.0);
      m.learn_one(fv, y);
    }
  }
}

TEST(HoeffdingTree, RootSplitsOnInformativeFeature) {
  ln::TreeParams params;
  ln::HoeffdingTree t(params);
  ThresholdStream s(3);
  int n = 0;
  while (t.root().is_leaf() && n < 5 * 200) {
    auto [fv, y] = s.next();
    t.learn_one(fv, y);
    ++n;
  }
  ASSERT_FALSE(t.root().is_leaf()) << "no split after " << n;
  EXPECT_EQ(t.root().feature, "x");
  EXPECT_GT(t.root().threshold, 0.0);
  EXPECT_LT(t.root().threshold, 1.0);
}

TEST(HoeffdingTree, NeverSplitsBeforeGracePeriod) {
  for (double grace : {50.0, 200.0}) {
    ln::HoeffdingTree t({.grace_period = grace, .tau = 1.0});
    ThresholdStream s(5);
    for (int i = 1; i < grace; ++i) {
      auto [fv, y] = s.next();
      t.learn_one(fv, y);
      ASSERT_TRUE(t.root().is_leaf()) << i;
    }
  }
}

TEST(HoeffdingTree, ThresholdConceptAccuracy) {
  ln::OnlineModel m(ln::ModelKind::htc);
  ThresholdStream s(42);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    auto [fv, y] = s.next();
    if (i >= 9000) hits += m.predict_proba_one(fv).label == y;
    m.learn_one(fv, y);
  }
  EXPECT_GE(hits / 1000.0, 0.95);
}

TEST(HoeffdingTree, DecisionPathReachesPredictionLeaf) {
  ln::HoeffdingTree t({.grace_period = 50});
  ThresholdStream s(9);
  for (int i = 0; i < 3000; ++i) {
    auto [fv, y] = s.next();
    t.learn_one(fv, y);
  }
  ASSERT_GT(t.depth(), 0u);
  for (int i = 0; i < 200; ++i) {
    auto [fv, y] = s.next();
    int leaf_id = -1;
    auto path = t.decision_path(fv, &leaf_id);
    EXPECT_EQ(leaf_id, t.leaf_for(fv).id);
    EXPECT_EQ(path.size() > 0, true);
    for (const auto& step : path) EXPECT_EQ(step.greater, step.value > step.threshold);
  }
}

TEST(HoeffdingTree, MissingFeaturesReadAsZero) {
  ln::HoeffdingTree t({.grace_period = 50});
  ThresholdStream s(10);
  for (int i = 0; i < 2000; ++i) {
    auto [fv, y] = s.next();
    t.learn_one(fv, y);
  }
  auto a = t.predict_proba_one({{"z", 0.3}});
  auto b = t.predict_proba_one({{"x", 0.0}, {"z", 0.3}});
  EXPECT_EQ(a.proba, b.proba);
}

TEST(AdaptiveTree, RecoversFromConceptFlip) {
  ln::OnlineModel hat(ln::ModelKind::hatc, {.grace_period = 50});
  ln::OnlineModel ht(ln::ModelKind::htc, {.grace_period = 50});
  ThresholdStream s(21);
  int hat_hits = 0, ht_hits = 0;
  for (int i = 0; i < 12000; ++i) {
    if (i == 4000) s.flipped = true;
    auto [fv, y] = s.next();
    if (i >= 11000) {
      hat_hits += hat.predict_proba_one(fv).label == y;
      ht_hits += ht.predict_proba_one(fv).label == y;
    }
    hat.learn_one(fv, y);
    ht.learn_one(fv, y);
  }
  EXPECT_GE(hat_hits / 1000.0, 0.9);
  EXPECT_GE(hat_hits, ht_hits);
}

TEST(Forest, MajorityVoteOfMembers) {
  auto constant_tree = [](Label l) {
    ln::HoeffdingTree t({.leaf_mode = ln::LeafMode::majority});
    t.learn_one({{"x", 1.0}}, l);
    return t;
  };
  std::vector<ln::HoeffdingTree> trees;
  trees.push_back(constant_tree(Label::spam));
  trees.push_back(constant_tree(Label::spam));
  trees.push_back(constant_tree(Label::nonspam));
  ln::AdaptiveRandomForest f({}, std::move(trees));
  auto p = f.predict_proba_one({{"x", 1.0}});
  EXPECT_EQ(p.label, Label::spam);
  EXPECT_NEAR(p.proba_of(Label::spam), (2.0 / 3 + 2.0 / 3 + 1.0 / 3) / 3, 1e-12);
  // a 1-1 tie goes to nonspam
  std::vector<ln::HoeffdingTree> pair;
  pair.push_back(constant_tree(Label::spam));
  pair.push_back(constant_tree(Label::nonspam));
  EXPECT_EQ(ln::AdaptiveRandomForest({}, std::move(pair)).predict_proba_one({}).label,
            Label::nonspam);
}

TEST(Forest, IdenticalMembersEqualSingleTree) {
  ln::HoeffdingTree t({.grace_period = 50});
  ThresholdStream s(12);
  for (int i = 0; i < 2000; ++i) {
    auto [fv, y] = s.next();
    t.learn_one(fv, y);
  }
  const auto j = t.to_json();
  std::vector<ln::HoeffdingTree> trees;
  for (int i = 0; i < 3; ++i) trees.push_back(ln::HoeffdingTree::from_json(j, t.params()));
  ln::AdaptiveRandomForest f({}, std::move(trees));
  for (int i = 0; i < 100; ++i) {
    auto [fv, y] = s.next();
    auto a = f.predict_proba_one(fv), b = t.predict_proba_one(fv);
    EXPECT_EQ(a.label, b.label);
    EXPECT_NEAR(a.proba[1], b.proba[1], 1e-12);
  }
}

TEST(Forest, LearnsThresholdConcept) {
  ln::OnlineModel m(ln::ModelKind::arfc, {.grace_period = 50, .n_trees = 5});
  ThresholdStream s(8);
  int hits = 0;
  for (int i = 0; i < 6000; ++i) {
    auto [fv, y] = s.next();
    if (i >= 5000) hits += m.predict_proba_one(fv).label == y;
    m.learn_one(fv, y);
  }
  EXPECT_GE(hits / 1000.0, 0.9);
  EXPECT_EQ(m.tree_count(), 5u);
}

TEST(Export, RoundTripPreservesPredictions) {
  for (auto kind : kAllKinds) {
    ln::OnlineModel m(kind, {.grace_period = 50, .n_trees = 3});
    ThresholdStream s(30);
    for (int i = 0; i < 3000; ++i) {
      auto [fv, y] = s.next();
      fv["w"] = static_cast<double>(i % 7);
      m.learn_one(fv, y);
    }
    const auto exported = m.export_trees();
    EXPECT_EQ(exported["trees"].size(), kind == ln::ModelKind::arfc ? 3u : 1u);
    auto back = ln::OnlineModel::import_trees(nlohmann::json::parse(exported.dump()));
    EXPECT_EQ(back.export_trees(), exported);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int i = 0; i < 100; ++i) {
      FeatureVector fv{{"x", u(rng)}, {"z", u(rng)}, {"w", u(rng) * 7}};
      auto a = m.predict_proba_one(fv), b = back.predict_proba_one(fv);
      EXPECT_EQ(a.label, b.label);
      EXPECT_EQ(a.proba, b.proba);
    }
  }
}

TEST(Export, EmptyModelIsSingleLeaf) {
  ln::OnlineModel m(ln::ModelKind::htc);
  auto j = m.export_trees();
  ASSERT_EQ(j["trees"].size(), 1u);
  ASSERT_EQ(j["trees"][0]["nodes"].size(), 1u);
  EXPECT_TRUE(j["trees"][0]["nodes"][0]["leaf"].get<bool>());
}

TEST(Prequential, PredictionIgnoresCurrentAndFutureLabels) {
  // Two runs share features; labels from step t onward are shuffled in the second.
  for (auto kind : kAllKinds) {
    ThresholdStream s(77);
    std::vector<std::pair<FeatureVector, Label>> data;
    for (int i = 0; i < 1500; ++i) data.push_back(s.next());
    std::mt19937_64 rng(5);
    for (std::size_t t : {0u, 400u, 1100u}) {
      auto other = data;
      std::vector<Label> tail;
      for (std::size_t i = t; i < other.size(); ++i) tail.push_back(other[i].second);
      std::shuffle(tail.begin(), tail.end(), rng);
      for (std::size_t i = t; i < other.size(); ++i) other[i].second = tail[i - t];
      ln::OnlineModel a(kind, {.grace_period = 50}), b(kind, {.grace_period = 50});
      for (std::size_t i = 0; i <= t; ++i) {
        ASSERT_EQ(a.predict_proba_one(data[i].first).proba,
                  b.predict_proba_one(other[i].first).proba)
            << ln::to_string(kind) << " t=" << t << " i=" << i;
        a.learn_one(data[i].first, data[i].second);
        b.learn_one(other[i].first, other[i].second);
      }
    }
  }
}

TEST(GridSearch, DefaultGridOrder) {
  auto g = ln::default_grid(ln::ModelKind::htc);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_EQ(g[0].grace_period, 50);
  EXPECT_EQ(g[0].delta, 1e-7);
  EXPECT_EQ(g[0].leaf_mode, ln::LeafMode::majority);
  EXPECT_EQ(g[1].leaf_mode, ln::LeafMode::naive_bayes_adaptive);
  EXPECT_EQ(g[2].delta, 1e-5);
  EXPECT_EQ(g[7].grace_period, 200);
  auto f = ln::default_grid(ln::ModelKind::arfc);
  ASSERT_EQ(f.size(), 16u);
  EXPECT_EQ(f[0].n_trees, 3u);
  EXPECT_EQ(f[1].n_trees, 10u);
}

TEST(GridSearch, SinglePointTiesAndEmptyWindow) {
  std::vector<ln::LabeledSample> window;
  EXPECT_FALSE(ln::grid_search_stream(ln::ModelKind::htc, window, ln::default_grid(ln::ModelKind::htc)));
  ThresholdStream s(4);
  for (int i = 0; i < 300; ++i) {
    auto [fv, y] = s.next();
    window.push_back({fv, y});
  }
  ln::Hyperparameters only{.grace_period = 123};
  auto one = ln::grid_search_stream(ln::ModelKind::htc, window, {only});
  ASSERT_TRUE(one);
  EXPECT_EQ(one->best, only);
  // two identical rows tie: the first wins
  ln::Hyperparameters a{.grace_period = 60, .seed = 1}, b{.grace_period = 60, .seed = 2};
  auto tie = ln::grid_search_stream(ln::ModelKind::htc, window, {a, b});
  ASSERT_TRUE(tie);
  EXPECT_EQ(tie->accuracies[0], tie->accuracies[1]);
  EXPECT_EQ(tie->best, a);
}

TEST(GridSearch, WinnerAtLeastAsGoodAsDefault) {
  std::vector<ln::LabeledSample> window;
  ThresholdStream s(6);
  for (int i = 0; i < 1500; ++i) {
    auto [fv, y] = s.next();
    window.push_back({fv, y});
  }
  for (auto kind : {ln::ModelKind::htc, ln::ModelKind::hatc}) {
    auto res = ln::grid_search_stream(kind, window, ln::default_grid(kind));
    ASSERT_TRUE(res);
    auto def = ln::grid_search_stream(kind, window, {ln::Hyperparameters{}});
    EXPECT_GE(res->accuracy, def->accuracy);
    EXPECT_EQ(res->accuracy, *std::max_element(res->accuracies.begin(), res->accuracies.end()));
    // the returned model is the winner trained over the whole window
    EXPECT_EQ(res->model.tree(0).samples(), window.size());
  }
}
