#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "revstream/eval.hpp"
#include "revstream/http_api.hpp"
#include "revstream/ingest.hpp"
#include "revstream/service.hpp"
#include "revstream/synthetic.hpp"
#include "revstream/textfeat.hpp"

using namespace revstream;
using nlohmann::json;

namespace {

struct InputOptions {
  std::string input;
  std::string profile = "yelp";
  bool balanced = false;
  std::size_t synthetic_n = 10000;
  std::size_t flip_at = 5000;
  std::uint64_t seed = 1;
};

void add_input_options(CLI::App* cmd, InputOptions& o) {
  cmd->add_option("--input", o.input, "CSV file (default: synthetic vocabulary-flip stream)");
  cmd->add_option("--profile", o.profile, "Dataset profile")->check(CLI::IsMember({"yelp", "mediawiki"}));
  cmd->add_flag("--balanced", o.balanced, "Undersample the majority class");
  cmd->add_option("--synthetic-n", o.synthetic_n, "Synthetic stream length");
  cmd->add_option("--flip-at", o.flip_at, "Synthetic vocabulary flip position");
  cmd->add_option("--seed", o.seed, "Seed for models and subsampling");
}

textfeat::DatasetProfile profile_of(const InputOptions& o) { return *textfeat::parse_profile(o.profile); }

std::vector<RawEvent> load_events(const InputOptions& o) {
  std::vector<RawEvent> events;
  if (o.input.empty()) {
    events = synthetic::vocabulary_flip_stream({.n = o.synthetic_n, .flip_at = o.flip_at});
  } else {
    auto res = ingest::ingest_csv(o.input, {.profile = profile_of(o)});
    std::cerr << "ingested " << res.stats.parsed << " of " << res.stats.rows << " rows ("
              << res.stats.malformed << " malformed, " << res.stats.unlabeled << " unlabeled)\n";
    for (const auto& d : res.stats.diagnostics) std::cerr << "  " << d << '\n';
    events = std::move(res.events);
  }
  if (o.balanced) events = eval::balanced_subset(events, o.seed);
  return events;
}

void print_row(const eval::ScenarioReport& r) {
  std::cout << std::left << std::setw(10) << r.detector << std::right << std::fixed
            << std::setprecision(2) << std::setw(10) << 100 * r.metrics.accuracy << std::setw(12)
            << 100 * r.metrics.f_nonspam << std::setw(10) << 100 * r.metrics.f_spam << std::setw(8)
            << r.drifts << std::setw(12) << std::setprecision(3) << r.runtime_seconds << '\n';
}

void print_header() {
  std::cout << std::left << std::setw(10) << "detector" << std::right << std::setw(10) << "acc%"
            << std::setw(12) << "F nonspam" << std::setw(10) << "F spam" << std::setw(8) << "drifts"
            << std::setw(12) << "seconds" << '\n';
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revstream: streaming spam-review detection with drift handling"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "debug|info|warn|error|off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  // run
  InputOptions run_in;
  int scenario = 4;
  std::string model = "arfc", detector = "proposed", out;
  std::size_t threads = 1;
  auto* run = app.add_subcommand("run", "Run one experimental scenario and print its report");
  add_input_options(run, run_in);
  run->add_option("--scenario", scenario, "1: single thread, 2: N threads, 3: N threads + drift, 4: single thread + drift")
      ->check(CLI::Range(1, 4));
  run->add_option("--model", model, "htc|hatc|arfc")->check(CLI::IsMember({"htc", "hatc", "arfc"}));
  run->add_option("--detector", detector, "proposed|eddm|adwin")
      ->check(CLI::IsMember({"proposed", "eddm", "adwin"}));
  run->add_option("--threads", threads, "Worker threads (scenarios 2 and 3)");
  run->add_option("--out", out, "Write the report JSON here");

  // detectors
  InputOptions det_in;
  std::string det_model = "htc", det_out;
  auto* det = app.add_subcommand("detectors", "Compare the proposed detector with EDDM and ADWIN");
  add_input_options(det, det_in);
  det->add_option("--model", det_model, "htc|hatc|arfc")->check(CLI::IsMember({"htc", "hatc", "arfc"}));
  det->add_option("--out", det_out, "Write the comparison JSON here");

  // features
  std::string feat_input, feat_text, feat_profile = "yelp";
  bool feat_table = false;
  std::size_t feat_limit = 0;
  auto* feat = app.add_subcommand("features", "Print content features (JSON lines) or the feature table");
  feat->add_option("--input", feat_input, "CSV file");
  feat->add_option("--text", feat_text, "A single review text");
  feat->add_option("--profile", feat_profile)->check(CLI::IsMember({"yelp", "mediawiki"}));
  feat->add_option("--limit", feat_limit, "Stop after N reviews (0: all)");
  feat->add_flag("--table", feat_table, "Print the feature id table as CSV");

  // serve
  InputOptions serve_in;
  std::string host = "127.0.0.1", serve_model = "htc", serve_detector = "proposed", log_path, replay_path;
  int port = 8080;
  std::size_t snapshot_every = 50;
  auto* serve = app.add_subcommand("serve", "Stream a CSV through the pipeline and serve the HTTP API");
  add_input_options(serve, serve_in);
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--snapshot-every", snapshot_every, "Publish read snapshots every N samples");
  serve->add_option("--model", serve_model)->check(CLI::IsMember({"htc", "hatc", "arfc"}));
  serve->add_option("--detector", serve_detector)->check(CLI::IsMember({"none", "proposed", "eddm", "adwin"}));
  serve->add_option("--log", log_path, "Append-only NDJSON log");
  serve->add_option("--replay", replay_path, "Restore state from a log instead of ingesting");

  // replay
  std::string rp_log, rp_out;
  auto* replay = app.add_subcommand("replay", "Rebuild state from a log and print /metrics");
  replay->add_option("--log", rp_log, "NDJSON log")->required();
  replay->add_option("--out", rp_out, "Write the /export JSON here");

  // synth
  std::size_t syn_n = 10000, syn_flip = 5000;
  std::string syn_out;
  auto* synth = app.add_subcommand("synth", "Write the synthetic vocabulary-flip stream as CSV");
  synth->add_option("--n", syn_n);
  synth->add_option("--flip-at", syn_flip);
  synth->add_option("--out", syn_out)->required();

  CLI11_PARSE(app, argc, argv);
  const std::map<std::string, log::Level> levels{{"debug", log::Level::debug}, {"info", log::Level::info},
                                                 {"warn", log::Level::warn},   {"error", log::Level::error},
                                                 {"off", log::Level::off}};
  log::set_level(levels.at(log_level));

  try {
    if (*run) {
      auto events = load_events(run_in);
      eval::ScenarioConfig cfg;
      cfg.scenario = scenario;
      cfg.threads = threads;
      cfg.model = learners::parse_model_kind(model);
      cfg.detector = eval::parse_detector(detector);
      cfg.profile = profile_of(run_in);
      cfg.seed = run_in.seed;
      auto rep = eval::run_scenario(cfg, events);
      print_header();
      print_row(rep);
      std::cout << "samples " << events.size() << ", " << std::setprecision(1) << rep.samples_per_second
                << " samples/s, " << std::setprecision(3) << rep.mean_ms_per_sample << " ms/sample, "
                << std::setprecision(2) << rep.drifts_per_thread << " drifts/thread\n";
      write_json(out, rep);
    } else if (*det) {
      auto events = load_events(det_in);
      eval::ScenarioConfig base;
      base.model = learners::parse_model_kind(det_model);
      base.profile = profile_of(det_in);
      base.seed = det_in.seed;
      auto rows = eval::compare_detectors(base, events);
      print_header();
      for (const auto& r : rows) print_row(r);
      write_json(det_out, rows);
    } else if (*feat) {
      if (feat_table) {
        std::cout << profiles::feature_id_table_csv();
        return 0;
      }
      const auto profile = *textfeat::parse_profile(feat_profile);
      std::vector<RawEvent> events;
      if (!feat_text.empty()) {
        RawEvent ev;
        ev.event_id = "text";
        ev.text = feat_text;
        events.push_back(ev);
      } else if (!feat_input.empty()) {
        events = ingest::ingest_csv(feat_input, {.profile = profile}).events;
      } else {
        std::cerr << "features: give --text, --input or --table\n";
        return 2;
      }
      std::size_t n = 0;
      for (const auto& ev : events) {
        if (feat_limit && n++ >= feat_limit) break;
        std::cout << json{{"event_id", ev.event_id},
                          {"features", textfeat::extract_content_features(ev, {.profile = profile})}}
                         .dump()
                  << '\n';
      }
    } else if (*serve) {
      std::ofstream log_file;
      if (!log_path.empty()) {
        std::ifstream existing(log_path);
        if (existing && existing.peek() != std::ifstream::traits_type::eof())
          throw std::runtime_error("log '" + log_path + "' is not empty; restore it with --replay and log elsewhere");
        log_file.open(log_path, std::ios::app);
        if (!log_file) throw std::runtime_error("cannot open log '" + log_path + "'");
      }
      std::ostream* log_out = log_path.empty() ? nullptr : &log_file;
      std::unique_ptr<service::Service> svc;
      std::vector<RawEvent> events;
      if (!replay_path.empty()) {
        std::ifstream in(replay_path);
        if (!in) throw std::runtime_error("cannot read '" + replay_path + "'");
        svc = service::Service::replay(in, log_out);
        std::cerr << "replayed " << svc->published() << " events\n";
      } else {
        service::ServiceConfig cfg;
        cfg.pipeline.profile = profile_of(serve_in);
        cfg.pipeline.model = learners::parse_model_kind(serve_model);
        cfg.pipeline.detector = eval::parse_detector(serve_detector);
        cfg.pipeline.hyperparameters.seed = serve_in.seed;
        cfg.snapshot_every = snapshot_every;
        svc = std::make_unique<service::Service>(cfg, log_out);
        events = load_events(serve_in);
      }
      auto generator = service::generator_from_env();
      service::ApiConfig api{service::env_or("REVSTREAM_ADMIN_TOKEN"), generator.get()};
      httplib::Server srv;
      service::register_routes(srv, *svc, api);
      g_server = &srv;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::atomic<bool> stop{false};
      std::jthread ingest_thread([&] {
        svc->process_all(events, &stop);
        std::cerr << "stream done: " << svc->published() << " events\n";
      });
      std::cerr << "listening on http://" << host << ':' << port << '\n';
      const bool ok = srv.listen(host, port);
      stop = true;
      g_server = nullptr;
      if (!ok) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    } else if (*replay) {
      std::ifstream in(rp_log);
      if (!in) throw std::runtime_error("cannot read '" + rp_log + "'");
      auto svc = service::Service::replay(in);
      std::cout << svc->metrics_json().dump(2) << '\n';
      write_json(rp_out, svc->export_json());
      if (svc->replay_mismatches() > 0) return 1;
    } else if (*synth) {
      std::ofstream o(syn_out);
      if (!o) throw std::runtime_error("cannot write '" + syn_out + "'");
      ingest::write_csv(o, synthetic::vocabulary_flip_stream({.n = syn_n, .flip_at = syn_flip}));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
