#include <atomic>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensordash/codec.hpp"
#include "sensordash/fitts.hpp"
#include "sensordash/gaze.hpp"
#include "sensordash/log.hpp"
#include "sensordash/net.hpp"
#include "sensordash/node_sim.hpp"
#include "sensordash/persistence.hpp"
#include "sensordash/service.hpp"
#include "sensordash/store.hpp"

namespace {

using namespace sensordash;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

sigset_t termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

/// Waits for SIGINT/SIGTERM, polling `done` every 200 ms. Returns true on a signal.
template <typename Done>
bool wait_for_signal(const sigset_t& set, Done done) {
  timespec tick{0, 200'000'000};
  while (!done()) {
    if (sigtimedwait(&set, nullptr, &tick) > 0) return true;
  }
  return false;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_output(const json& report, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << report.dump(2) << '\n';
}

int cmd_serve(const std::string& config_path) {
  const auto signals = termination_signals();
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::ServiceConfig config;
  try {
    config = service::load_config(config_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  service::Service svc(std::move(config));
  svc.start();
  wait_for_signal(signals, [] { return false; });
  log::info("shutting down");
  svc.stop();
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, double duration_s, const std::string& target) {
  const auto signals = termination_signals();
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::vector<sim::NodeConfig> configs;
  try {
    configs = sim::node_configs_from_json(read_json_file(config_path));
    if (!target.empty()) {
      const auto ep = net::parse_endpoint(target);
      for (auto& c : configs) {
        c.target_host = ep.host;
        c.target_port = ep.port;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  std::atomic<std::size_t> finished{0};
  std::vector<sim::RunStats> stats(configs.size());
  std::vector<std::jthread> threads;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    threads.emplace_back([&, i](std::stop_token stop) {
      sim::Node node(configs[i]);
      sim::SystemClock clock;
      sim::UdpEmitter emitter(configs[i].target_host, configs[i].target_port);
      stats[i] = node.run(clock, emitter, stop, duration_s);
      ++finished;
    });
  }
  if (wait_for_signal(signals, [&] { return finished == configs.size(); })) {
    for (auto& t : threads) t.request_stop();
  }
  threads.clear();

  std::uint64_t failed = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    log::info(configs[i].node_id, ": ", stats[i].ticks, " ticks, ", stats[i].sent, " sent, ",
              stats[i].failed, " failed");
    failed += stats[i].failed;
  }
  return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_replay(const std::string& file, const std::string& target, double speed) {
  if (!std::filesystem::exists(file)) throw ConfigError("no such file: " + file);
  const auto replay = load_reading_log(file);
  if (replay.skipped_lines > 0) log::warn("skipped ", replay.skipped_lines, " unreadable lines");

  if (!target.empty()) {
    net::Endpoint ep;
    try {
      ep = net::parse_endpoint(target);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    sim::UdpEmitter emitter(ep.host, ep.port);
    std::size_t failed = 0;
    const auto start = std::chrono::steady_clock::now();
    const auto first_ts = replay.readings.empty() ? 0 : replay.readings.front().timestamp_ms;
    for (const auto& r : replay.readings) {
      if (speed > 0.0 && r.timestamp_ms > first_ts) {
        const auto offset = std::chrono::duration<double, std::milli>(
            static_cast<double>(r.timestamp_ms - first_ts) / speed);
        std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::nanoseconds>(offset));
      }
      if (!emitter.send(codec::encode(r))) ++failed;
    }
    log::info("sent ", replay.readings.size() - failed, " of ", replay.readings.size(), " readings");
    if (failed > 0) return kExitRuntime;
  }

  TelemetryStore store;
  std::map<std::string, std::size_t> outcomes;
  for (const auto& r : replay.readings) {
    switch (store.ingest(r)) {
      case IngestOutcome::stored: ++outcomes["stored"]; break;
      case IngestOutcome::duplicate: ++outcomes["duplicate"]; break;
      case IngestOutcome::stale: ++outcomes["stale"]; break;
    }
  }
  json sensors = json::array();
  for (const auto& key : store.keys()) {
    const auto s = store.summarize(key, {});
    sensors.push_back({{"key", to_string(key)},
                       {"count", s.count},
                       {"low", s.low},
                       {"high", s.high},
                       {"mean", s.mean},
                       {"latest", s.latest}});
  }
  std::cout << json{{"readings", replay.readings.size()},
                    {"skipped_lines", replay.skipped_lines},
                    {"outcomes", outcomes},
                    {"sensors", sensors}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

int cmd_gaze(const std::vector<std::string>& gaze_files, const std::vector<std::string>& event_files,
             const std::vector<std::string>& participants, const std::string& screen,
             bool cluster_fixations, const std::string& out) {
  if (gaze_files.size() != event_files.size()) {
    throw ConfigError("--gaze and --events must be given the same number of times");
  }
  if (!participants.empty() && participants.size() != gaze_files.size()) {
    throw ConfigError("--participant must be given once per --gaze file");
  }
  gaze::StudyOptions options;
  options.cluster_fixations = cluster_fixations;
  try {
    options.screen = gaze::parse_screen(screen);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  std::vector<gaze::SessionLog> logs;
  for (std::size_t i = 0; i < gaze_files.size(); ++i) {
    gaze::SessionLog log;
    log.participant_id = participants.empty() ? "P" + std::to_string(i + 1) : participants[i];
    auto g = open_input(gaze_files[i]);
    auto e = open_input(event_files[i]);
    log.gaze = gaze::read_gaze_csv(g);
    log.questions = gaze::read_events_csv(e);
    logs.push_back(std::move(log));
  }
  write_output(gaze::render_report(gaze::study_metrics(logs, options)), out);
  return kExitOk;
}

int cmd_fitts(const std::string& trials_path, const std::string& subjective_path,
              const fitts::AnalysisOptions& options, const std::string& out) {
  auto t = open_input(trials_path);
  const auto trials = fitts::read_trials_csv(t);
  std::vector<fitts::SubjectiveScore> subjective;
  if (!subjective_path.empty()) {
    auto s = open_input(subjective_path);
    subjective = fitts::read_subjective_csv(s);
  }
  write_output(fitts::analyze(trials, subjective, options), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor telemetry dashboard service, node simulator and study analytics"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the UDP listener, alert engine and HTTP API");
  serve->add_option("--config", config_path, "Service config JSON")->required();

  std::string sim_config, sim_target;
  double duration = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Run simulated sensor nodes");
  simulate->add_option("--config", sim_config, "Node config JSON (one node or {\"nodes\": [...]})")->required();
  simulate->add_option("--duration", duration, "Seconds to run; 0 runs until interrupted")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--target", sim_target, "Override every node's host:port");

  std::string replay_file, replay_target;
  double speed = 0.0;
  auto* replay = app.add_subcommand("replay", "Summarize a reading log, optionally re-sending it over UDP");
  replay->add_option("--file", replay_file, "Reading log (JSONL)")->required();
  replay->add_option("--target", replay_target, "Send each reading to host:port");
  replay->add_option("--speed", speed, "Playback speed factor; 0 sends as fast as possible")
      ->check(CLI::NonNegativeNumber);

  std::vector<std::string> gaze_files, event_files, participants;
  std::string screen = "1366x768", gaze_out;
  bool cluster_fixations = false;
  auto* gaze_cmd = app.add_subcommand("gaze-report", "CA/ART/TRT/ONC and transitions from gaze sessions");
  gaze_cmd->add_option("--gaze", gaze_files, "Gaze CSV (timestamp_ms,x,y); repeat per participant")->required();
  gaze_cmd->add_option("--events", event_files, "Question CSV; repeat in the same order as --gaze")->required();
  gaze_cmd->add_option("--participant", participants, "Participant id per --gaze file");
  gaze_cmd->add_option("--screen", screen, "Screen size WxH");
  gaze_cmd->add_flag("--cluster-fixations", cluster_fixations, "Cluster fixation centroids instead of raw samples");
  gaze_cmd->add_option("--out", gaze_out, "Output JSON file (stdout if omitted)");

  std::string trials_path, subjective_path, fitts_out;
  fitts::AnalysisOptions fitts_options;
  bool per_trial = false, paired = false;
  auto* fitts_cmd = app.add_subcommand("fitts-report", "Fitts' law summaries, fits, ANOVA and t-tests");
  fitts_cmd->add_option("--trials", trials_path, "Trial CSV")->required();
  fitts_cmd->add_option("--subjective", subjective_path, "SUS/TLX CSV");
  fitts_cmd->add_option("--alpha", fitts_options.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  fitts_cmd->add_flag("--per-trial-throughput", per_trial, "Average ID/MT over trials instead of over IDs");
  fitts_cmd->add_flag("--exclude-errors", fitts_options.summary.exclude_error_trials,
                      "Drop trials with a nonzero error distance");
  fitts_cmd->add_flag("--paired", paired, "Paired t-tests (within-subjects)");
  fitts_cmd->add_option("--out", fitts_out, "Output JSON file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  if (verbose) log::set_level(log::Level::debug);

  try {
    if (*serve) return cmd_serve(config_path);
    if (*simulate) return cmd_simulate(sim_config, duration, sim_target);
    if (*replay) return cmd_replay(replay_file, replay_target, speed);
    if (*gaze_cmd) {
      return cmd_gaze(gaze_files, event_files, participants, screen, cluster_fixations, gaze_out);
    }
    if (*fitts_cmd) {
      if (per_trial) fitts_options.summary.throughput_mode = fitts::ThroughputMode::per_trial;
      if (paired) fitts_options.ttest_mode = fitts::TTestMode::paired;
      return cmd_fitts(trials_path, subjective_path, fitts_options, fitts_out);
    }
  } catch (const ConfigError& e) {
    log::error(e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log::error(e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
