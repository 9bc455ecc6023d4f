#pragma once

// Experimental scenarios: sequential or chronologically partitioned runs, with or
// without drift handling, and the detector comparison table.

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "json.hpp"
#include "revstream/metrics.hpp"
#include "revstream/pipeline.hpp"

namespace revstream::eval {

/// Block sizes for `n` items over `threads` workers: the first n % threads blocks get
/// one extra item; empty blocks are dropped.
inline std::vector<std::size_t> partition_sizes(std::size_t n, std::size_t threads) {
  if (threads == 0) throw InvalidArgument("partition: threads >= 1");
  std::vector<std::size_t> sizes;
  const std::size_t base = n / threads, extra = n % threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t s = base + (t < extra ? 1 : 0);
    if (s > 0) sizes.push_back(s);
  }
  return sizes;
}

template <typename T>
std::vector<std::vector<T>> partition_chronological(const std::vector<T>& stream,
                                                    std::size_t threads) {
  std::vector<std::vector<T>> blocks;
  std::size_t pos = 0;
  for (std::size_t s : partition_sizes(stream.size(), threads)) {
    blocks.emplace_back(stream.begin() + pos, stream.begin() + pos + s);
    pos += s;
  }
  return blocks;
}

/// Undersamples the majority class uniformly to the minority size, then restores
/// chronological order (stable on equal timestamps).
inline std::vector<RawEvent> balanced_subset(const std::vector<RawEvent>& events,
                                             std::uint64_t seed) {
  std::vector<std::size_t> spam, ham;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!events[i].label) continue;
    (*events[i].label == Label::spam ? spam : ham).push_back(i);
  }
  if (spam.empty() || ham.empty()) throw InvalidArgument("balanced_subset: a class is empty");
  std::mt19937_64 rng(seed);
  auto& major = spam.size() > ham.size() ? spam : ham;
  const auto& minor = spam.size() > ham.size() ? ham : spam;
  std::vector<std::size_t> kept;
  std::sample(major.begin(), major.end(), std::back_inserter(kept), minor.size(), rng);
  kept.insert(kept.end(), minor.begin(), minor.end());
  std::sort(kept.begin(), kept.end());
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return events[a].timestamp < events[b].timestamp;
  });
  std::vector<RawEvent> out;
  out.reserve(kept.size());
  for (auto i : kept) out.push_back(events[i]);
  return out;
}

struct ScenarioConfig {
  int scenario = 1;
  std::size_t threads = 1;
  learners::ModelKind model = learners::ModelKind::htc;
  DetectorKind detector = DetectorKind::proposed;  // used when the scenario enables drift
  learners::Hyperparameters hyperparameters;
  textfeat::DatasetProfile profile = textfeat::DatasetProfile::yelp;
  drift::WindowConfig window;
  std::uint64_t seed = 1;

  bool drift_enabled() const noexcept { return scenario == 3 || scenario == 4; }
  bool parallel() const noexcept { return scenario == 2 || scenario == 3; }

  void validate() const {
    if (scenario < 1 || scenario > 4) throw InvalidArgument("scenario must be 1..4");
    if (!parallel() && threads != 1)
      throw InvalidArgument("scenarios 1 and 4 run on a single thread");
    if (threads == 0) throw InvalidArgument("threads >= 1");
    if (drift_enabled() && detector == DetectorKind::none)
      throw InvalidArgument("scenarios 3 and 4 need a drift detector");
  }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.profile = profile;
    p.model = model;
    p.hyperparameters = hyperparameters;
    p.hyperparameters.seed = seed;
    p.detector = drift_enabled() ? detector : DetectorKind::none;
    p.window = window;
    return p;
  }
};

struct ThreadReport {
  std::size_t thread = 0;
  std::size_t first_index = 0;  // offset of the block in the input stream
  Confusion confusion;
  MetricsSummary metrics;
  std::uint64_t drifts = 0;
  double seconds = 0.0;
};

struct ScenarioReport {
  int scenario = 1;
  std::size_t threads = 1;
  std::string model;
  std::string detector;
  Confusion confusion;  // sum over threads
  MetricsSummary metrics;
  std::uint64_t drifts = 0;
  double drifts_per_thread = 0.0;
  double runtime_seconds = 0.0;       // wall clock
  double samples_per_second = 0.0;
  double mean_ms_per_sample = 0.0;    // mean per-sample processing time
  std::vector<ThreadReport> per_thread;
};

inline void to_json(nlohmann::json& j, const ThreadReport& t) {
  j = nlohmann::json{{"thread", t.thread},       {"first_index", t.first_index},
                     {"confusion", t.confusion}, {"metrics", t.metrics},
                     {"drifts", t.drifts},       {"seconds", t.seconds}};
}

inline void from_json(const nlohmann::json& j, ThreadReport& t) {
  t.thread = j.at("thread").get<std::size_t>();
  t.first_index = j.at("first_index").get<std::size_t>();
  t.confusion = j.at("confusion").get<Confusion>();
  t.metrics = j.at("metrics").get<MetricsSummary>();
  t.drifts = j.at("drifts").get<std::uint64_t>();
  t.seconds = j.at("seconds").get<double>();
}

inline void to_json(nlohmann::json& j, const ScenarioReport& r) {
  j = nlohmann::json{{"scenario", r.scenario},
                     {"threads", r.threads},
                     {"model", r.model},
                     {"detector", r.detector},
                     {"confusion", r.confusion},
                     {"metrics", r.metrics},
                     {"drifts", r.drifts},
                     {"drifts_per_thread", r.drifts_per_thread},
                     {"runtime_seconds", r.runtime_seconds},
                     {"samples_per_second", r.samples_per_second},
                     {"mean_ms_per_sample", r.mean_ms_per_sample},
                     {"per_thread", r.per_thread}};
}

inline void from_json(const nlohmann::json& j, ScenarioReport& r) {
  r.scenario = j.at("scenario").get<int>();
  r.threads = j.at("threads").get<std::size_t>();
  r.model = j.at("model").get<std::string>();
  r.detector = j.at("detector").get<std::string>();
  r.confusion = j.at("confusion").get<Confusion>();
  r.metrics = j.at("metrics").get<MetricsSummary>();
  r.drifts = j.at("drifts").get<std::uint64_t>();
  r.drifts_per_thread = j.at("drifts_per_thread").get<double>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  r.samples_per_second = j.at("samples_per_second").get<double>();
  r.mean_ms_per_sample = j.at("mean_ms_per_sample").get<double>();
  r.per_thread = j.at("per_thread").get<std::vector<ThreadReport>>();
}

/// Runs one isolated pipeline per chronological block and merges the results.
/// `on_step(thread, result)` is called from the worker threads.
template <typename OnStep>
ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::vector<RawEvent>& events,
                            OnStep on_step) {
  cfg.validate();
  const auto blocks = partition_chronological(events, cfg.threads);
  std::vector<ThreadReport> reports(blocks.size());
  const auto t0 = std::chrono::steady_clock::now();
  auto work = [&](std::size_t t) {
    Pipeline p(cfg.pipeline());
    for (const auto& ev : blocks[t]) on_step(t, p.step(ev));
    auto& rep = reports[t];
    rep.thread = t;
    rep.confusion = p.confusion();
    rep.metrics = p.metrics();
    rep.drifts = p.drifts();
    rep.seconds = p.seconds();
  };
  if (blocks.size() <= 1) {
    if (!blocks.empty()) work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < blocks.size(); ++t) pool.emplace_back(work, t);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ScenarioReport out;
  out.scenario = cfg.scenario;
  out.threads = cfg.threads;
  out.model = learners::to_string(cfg.model);
  out.detector = to_string(cfg.drift_enabled() ? cfg.detector : DetectorKind::none);
  std::size_t offset = 0;
  double busy = 0.0;
  for (std::size_t t = 0; t < reports.size(); ++t) {
    reports[t].first_index = offset;
    offset += blocks[t].size();
    out.confusion += reports[t].confusion;
    out.drifts += reports[t].drifts;
    busy += reports[t].seconds;
  }
  out.metrics = summarize(out.confusion);
  out.drifts_per_thread =
      reports.empty() ? 0.0 : static_cast<double>(out.drifts) / static_cast<double>(reports.size());
  out.runtime_seconds = wall;
  out.samples_per_second = wall > 0 ? static_cast<double>(events.size()) / wall : 0.0;
  out.mean_ms_per_sample = events.empty() ? 0.0 : 1000.0 * busy / static_cast<double>(events.size());
  out.per_thread = std::move(reports);
  return out;
}

inline ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::vector<RawEvent>& events) {
  return run_scenario(cfg, events, [](std::size_t, const StepResult&) {});
}

/// Scenario-4 runs with each detector (plus the detector-free baseline first).
inline std::vector<ScenarioReport> compare_detectors(ScenarioConfig base,
                                                     const std::vector<RawEvent>& events) {
  std::vector<ScenarioReport> rows;
  base.threads = 1;
  base.scenario = 1;
  rows.push_back(run_scenario(base, events));
  base.scenario = 4;
  for (auto d : {DetectorKind::proposed, DetectorKind::eddm, DetectorKind::adwin}) {
    base.detector = d;
    rows.push_back(run_scenario(base, events));
  }
  return rows;
}

}  // namespace revstream::eval
