#pragma once

// Model facade over the three tree learners, JSON export/import, and stream grid search.

#include <cctype>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "revstream/forest.hpp"
#include "revstream/hoeffding.hpp"

namespace revstream::learners {

enum class ModelKind { htc, hatc, arfc };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::htc: return "htc";
    case ModelKind::hatc: return "hatc";
    case ModelKind::arfc: return "arfc";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "htc") return ModelKind::htc;
  if (s == "hatc") return ModelKind::hatc;
  if (s == "arfc") return ModelKind::arfc;
  throw InvalidArgument("unknown model kind '" + s + "'");
}

struct Hyperparameters {
  double grace_period = 200;
  double delta = 1e-7;
  double tau = 0.05;
  LeafMode leaf_mode = LeafMode::naive_bayes_adaptive;
  std::size_t n_trees = 10;
  std::size_t subspace_size = 0;  // 0: floor(sqrt(n)) + 1
  double lambda = 6.0;
  double warning_delta = 0.01;
  double drift_delta = 0.001;
  std::uint64_t seed = 1;

  bool operator==(const Hyperparameters&) const = default;
};

inline void to_json(json& j, const Hyperparameters& h) {
  j = json{{"grace_period", h.grace_period}, {"delta", h.delta},
           {"tau", h.tau},                   {"leaf_mode", to_string(h.leaf_mode)},
           {"n_trees", h.n_trees},           {"subspace_size", h.subspace_size},
           {"lambda", h.lambda},             {"warning_delta", h.warning_delta},
           {"drift_delta", h.drift_delta},   {"seed", h.seed}};
}

inline void from_json(const json& j, Hyperparameters& h) {
  Hyperparameters d;
  h.grace_period = j.value("grace_period", d.grace_period);
  h.delta = j.value("delta", d.delta);
  h.tau = j.value("tau", d.tau);
  h.leaf_mode = parse_leaf_mode(j.value("leaf_mode", std::string(to_string(d.leaf_mode))));
  h.n_trees = j.value("n_trees", d.n_trees);
  h.subspace_size = j.value("subspace_size", d.subspace_size);
  h.lambda = j.value("lambda", d.lambda);
  h.warning_delta = j.value("warning_delta", d.warning_delta);
  h.drift_delta = j.value("drift_delta", d.drift_delta);
  h.seed = j.value("seed", d.seed);
}

inline TreeParams tree_params(ModelKind kind, const Hyperparameters& h) {
  TreeParams t;
  t.grace_period = h.grace_period;
  t.delta = h.delta;
  t.tau = h.tau;
  t.leaf_mode = h.leaf_mode;
  t.adaptive = kind == ModelKind::hatc;
  t.subspace_size = h.subspace_size;
  t.seed = h.seed;
  return t;
}

inline ForestParams forest_params(const Hyperparameters& h) {
  ForestParams f;
  f.tree = tree_params(ModelKind::arfc, h);
  f.n_trees = h.n_trees;
  f.lambda = h.lambda;
  f.warning_delta = h.warning_delta;
  f.drift_delta = h.drift_delta;
  f.seed = h.seed;
  return f;
}

class OnlineModel {
 public:
  explicit OnlineModel(ModelKind kind = ModelKind::htc, Hyperparameters h = {})
      : kind_(kind), h_(h), impl_(make(kind, h)) {}

  ModelKind kind() const noexcept { return kind_; }
  const Hyperparameters& hyperparameters() const noexcept { return h_; }

  Prediction predict_proba_one(const FeatureVector& fv) const {
    return std::visit([&](const auto& m) { return m.predict_proba_one(fv); }, impl_);
  }

  void learn_one(const FeatureVector& fv, Label y, double weight = 1.0) {
    std::visit([&](auto& m) { m.learn_one(fv, y, weight); }, impl_);
  }

  std::size_t tree_count() const noexcept {
    if (auto* f = std::get_if<AdaptiveRandomForest>(&impl_)) return f->members().size();
    return 1;
  }

  const HoeffdingTree& tree(std::size_t i) const {
    if (auto* f = std::get_if<AdaptiveRandomForest>(&impl_)) return f->members().at(i).tree;
    if (i != 0) throw InvalidArgument("tree index out of range");
    return std::get<HoeffdingTree>(impl_);
  }

  const AdaptiveRandomForest* forest() const noexcept {
    return std::get_if<AdaptiveRandomForest>(&impl_);
  }

  /// {"kind", "hyperparameters", "trees": [{"root", "nodes": [...]}, ...]}
  json export_trees() const {
    json trees = json::array();
    for (std::size_t i = 0; i < tree_count(); ++i) trees.push_back(tree(i).to_json());
    return {{"kind", to_string(kind_)}, {"hyperparameters", h_}, {"trees", std::move(trees)}};
  }

  static OnlineModel import_trees(const json& j) {
    OnlineModel m(parse_model_kind(j.at("kind").get<std::string>()),
                  j.at("hyperparameters").get<Hyperparameters>());
    const auto& trees = j.at("trees");
    if (m.kind_ == ModelKind::arfc) {
      auto fp = forest_params(m.h_);
      std::vector<HoeffdingTree> members;
      for (const auto& t : trees) members.push_back(HoeffdingTree::from_json(t, fp.tree));
      m.impl_ = AdaptiveRandomForest(fp, std::move(members));
    } else {
      if (trees.size() != 1) throw InvalidArgument("single-tree model needs exactly one tree");
      m.impl_ = HoeffdingTree::from_json(trees.at(0), tree_params(m.kind_, m.h_));
    }
    return m;
  }

 private:
  using Impl = std::variant<HoeffdingTree, AdaptiveRandomForest>;

  static Impl make(ModelKind kind, const Hyperparameters& h) {
    if (kind == ModelKind::arfc) return AdaptiveRandomForest(forest_params(h));
    return HoeffdingTree(tree_params(kind, h));
  }

  ModelKind kind_;
  Hyperparameters h_;
  Impl impl_;
};

/// Grid rows in documented order: grace {50, 200} x delta {1e-7, 1e-5} x tau {0.05} x
/// leaf {majority, nba}, and for the forest additionally n_trees {3, 10} innermost.
inline std::vector<Hyperparameters> default_grid(ModelKind kind, const Hyperparameters& base = {}) {
  std::vector<Hyperparameters> grid;
  for (double grace : {50.0, 200.0})
    for (double delta : {1e-7, 1e-5})
      for (double tau : {0.05})
        for (LeafMode leaf : {LeafMode::majority, LeafMode::naive_bayes_adaptive}) {
          Hyperparameters h = base;
          h.grace_period = grace;
          h.delta = delta;
          h.tau = tau;
          h.leaf_mode = leaf;
          if (kind == ModelKind::arfc) {
            for (std::size_t n : {3, 10}) {
              h.n_trees = n;
              grid.push_back(h);
            }
          } else {
            grid.push_back(h);
          }
        }
  return grid;
}

struct LabeledSample {
  FeatureVector x;
  Label y = Label::nonspam;
};

struct GridResult {
  Hyperparameters best;
  double accuracy = 0.0;
  std::vector<double> accuracies;  // per grid row
  OnlineModel model;               // the winner, trained over the window
};

/// Trains a fresh model per grid row prequentially over `window` and keeps the most
/// accurate (first row on ties). Empty window or grid: nullopt.
template <typename Range, typename Project>
std::optional<GridResult> grid_search_stream(ModelKind kind, const Range& window,
                                             const std::vector<Hyperparameters>& grid,
                                             Project project) {
  if (std::begin(window) == std::end(window) || grid.empty()) return std::nullopt;
  std::optional<GridResult> result;
  std::vector<double> accs;
  for (const auto& h : grid) {
    OnlineModel m(kind, h);
    std::size_t hits = 0, n = 0;
    for (const auto& item : window) {
      const LabeledSample& s = project(item);
      hits += m.predict_proba_one(s.x).label == s.y;
      m.learn_one(s.x, s.y);
      ++n;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(n);
    accs.push_back(acc);
    if (!result || acc > result->accuracy) result = GridResult{h, acc, {}, std::move(m)};
  }
  result->accuracies = std::move(accs);
  return result;
}

template <typename Range>
std::optional<GridResult> grid_search_stream(ModelKind kind, const Range& window,
                                             const std::vector<Hyperparameters>& grid) {
  return grid_search_stream(kind, window, grid,
                            [](const LabeledSample& s) -> const LabeledSample& { return s; });
}

}  // namespace revstream::learners
