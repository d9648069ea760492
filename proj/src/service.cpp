#include "sensordash/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "sensordash/codec.hpp"
#include "sensordash/csv.hpp"
#include "sensordash/fitts.hpp"
#include "sensordash/log.hpp"

namespace sensordash::service {
namespace {

using nlohmann::json;

std::uint64_t wall_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

net::Endpoint endpoint_field(const json& j, const char* name, const net::Endpoint& fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return net::parse_endpoint(j.at(name).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string(name) + ": " + e.what());
  }
}

class HttpError : public std::runtime_error {
public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  [[nodiscard]] int status() const noexcept { return status_; }

private:
  int status_;
};

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

// Maps library exceptions onto the API's status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const HttpError& e) {
    send_error(res, e.status(), e.what());
  } catch (const KeyError& e) {
    send_error(res, 404, e.what());
  } catch (const EmptyWindowError& e) {
    send_error(res, 422, e.what());
  } catch (const alerts::EmptySelectionError& e) {
    send_error(res, 422, e.what());
  } catch (const alerts::ConfigurationError& e) {
    send_error(res, 422, e.what());
  } catch (const gaze::InsufficientDataError& e) {
    send_error(res, 422, e.what());
  } catch (const gaze::DegenerateSeparationError& e) {
    send_error(res, 422, e.what());
  } catch (const fitts::EmptyGroupError& e) {
    send_error(res, 422, e.what());
  } catch (const fitts::InsufficientDataError& e) {
    send_error(res, 422, e.what());
  } catch (const fitts::DegenerateFitError& e) {
    send_error(res, 422, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, e.what());
  } catch (const csv::ParseError& e) {
    send_error(res, 400, e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, e.what());
  } catch (const std::out_of_range& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

std::uint64_t parse_u64(const std::string& text, const char* name) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw HttpError(400, std::string("query parameter '") + name + "' must be a non-negative integer");
  }
  return v;
}

TimeRange range_of(const httplib::Request& req) {
  TimeRange range;
  if (req.has_param("from")) range.from_ms = parse_u64(req.get_param_value("from"), "from");
  if (req.has_param("to")) range.to_ms = parse_u64(req.get_param_value("to"), "to");
  if (range.from_ms > range.to_ms) throw HttpError(400, "'from' is after 'to'");
  return range;
}

std::size_t max_points_of(const httplib::Request& req, std::size_t fallback) {
  if (!req.has_param("max_points")) return fallback;
  const auto v = parse_u64(req.get_param_value("max_points"), "max_points");
  if (v < 2) throw HttpError(400, "max_points must be at least 2");
  return static_cast<std::size_t>(v);
}

SensorKey key_of(const httplib::Request& req) {
  const auto& node = req.path_params.at("node");
  const auto type = parse_sensor_type(req.path_params.at("type"));
  if (!type) throw HttpError(404, "unknown sensor type '" + req.path_params.at("type") + "'");
  return {node, *type};
}

json summary_json(const SeriesSummary& s) {
  return {{"low", s.low}, {"high", s.high}, {"mean", s.mean}, {"count", s.count}, {"latest", s.latest}};
}

json points_json(const std::vector<SeriesPoint>& points) {
  json out = json::array();
  for (const auto& p : points) out.push_back({{"timestamp_ms", p.timestamp_ms}, {"value", p.value}});
  return out;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

std::string file_field(const httplib::Request& req, const std::string& name) {
  if (!req.has_file(name)) throw HttpError(400, "missing multipart field '" + name + "'");
  return req.get_file_value(name).content;
}

std::optional<std::string> optional_field(const httplib::Request& req, const std::string& name) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  return std::nullopt;
}

bool truthy(const std::string& s) { return s == "1" || s == "true" || s == "yes"; }

}  // namespace

void ServiceConfig::validate(bool sinks_supplied) const {
  if (listen_udp.port != 0 && listen_udp.port == listen_http.port) {
    throw ConfigurationError("listen_udp and listen_http must use different ports");
  }
  const bool any_enabled =
      std::any_of(rules.begin(), rules.end(), [](const alerts::AlertRule& r) { return r.enabled; });
  if (any_enabled && sinks.empty() && !sinks_supplied) throw ConfigurationError("enabled rules need at least one sink");
  if (capacity == 0) throw ConfigurationError("capacity must be positive");
  if (stream_queue == 0) throw ConfigurationError("stream_queue must be positive");
  for (const auto& r : rules) {
    try {
      r.validate();
    } catch (const std::exception& e) {
      throw ConfigurationError(std::string("rule: ") + e.what());
    }
  }
}

ServiceConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  ServiceConfig c;
  try {
    c.listen_udp = endpoint_field(j, "listen_udp", c.listen_udp);
    c.listen_http = endpoint_field(j, "listen_http", c.listen_http);
    if (j.contains("sinks")) {
      for (const auto& s : j.at("sinks")) {
        (void)alerts::sink_from_json(s);
        c.sinks.push_back(s);
      }
    }
    if (j.contains("recipients")) c.recipients = j.at("recipients").get<std::vector<std::string>>();
    if (j.contains("rules")) {
      for (const auto& r : j.at("rules")) c.rules.push_back(alerts::rule_from_json(r));
    }
    if (j.contains("persistence_path") && !j.at("persistence_path").is_null()) {
      c.persistence_path = j.at("persistence_path").get<std::string>();
    }
    if (j.contains("alert_log_path") && !j.at("alert_log_path").is_null()) {
      c.alert_log_path = j.at("alert_log_path").get<std::string>();
    }
    if (j.contains("screen")) c.screen = gaze::parse_screen(j.at("screen").get<std::string>());
    if (j.contains("capacity")) c.capacity = j.at("capacity").get<std::size_t>();
    if (j.contains("stream_queue")) c.stream_queue = j.at("stream_queue").get<std::size_t>();
    if (j.contains("stream_replay")) c.stream_replay = j.at("stream_replay").get<std::size_t>();
  } catch (const ConfigurationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigurationError(e.what());
  }
  c.validate();
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config " + path.string() + ": " + e.what());
  }
}

std::string format_sse(const StreamEvent& event) {
  std::string out = "id: " + std::to_string(event.id) + "\nevent: " + event.type + "\n";
  std::istringstream lines(event.data);
  std::string line;
  while (std::getline(lines, line)) out += "data: " + line + "\n";
  return out + "\n";
}

std::optional<StreamEvent> StreamHub::Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
  if (closed_ || queue_.empty()) return std::nullopt;
  auto ev = std::move(queue_.front());
  queue_.pop_front();
  return ev;
}

bool StreamHub::Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t StreamHub::Subscription::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

void StreamHub::Subscription::push(const StreamEvent& event) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    queue_.push_back(event);
    while (queue_.size() > limit_) {
      queue_.pop_front();
      ++dropped_;
    }
  }
  cv_.notify_one();
}

void StreamHub::Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

StreamHub::StreamHub(std::size_t queue_limit, std::size_t replay_limit)
    : queue_limit_(queue_limit), replay_limit_(replay_limit) {}

std::uint64_t StreamHub::publish(const std::string& type, const std::string& data) {
  std::lock_guard lock(mutex_);
  StreamEvent ev{next_id_++, type, data};
  if (type == "alert" && replay_limit_ > 0) {
    replay_.push_back(ev);
    if (replay_.size() > replay_limit_) replay_.pop_front();
  }
  for (const auto& s : subs_) s->push(ev);
  return ev.id;
}

std::shared_ptr<StreamHub::Subscription> StreamHub::subscribe(std::optional<std::uint64_t> last_event_id) {
  auto sub = std::make_shared<Subscription>(queue_limit_);
  std::lock_guard lock(mutex_);
  if (closed_) {
    sub->close();
    return sub;
  }
  if (last_event_id) {
    for (const auto& ev : replay_) {
      if (ev.id > *last_event_id) sub->push(ev);
    }
  }
  subs_.push_back(sub);
  return sub;
}

void StreamHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
  std::lock_guard lock(mutex_);
  std::erase(subs_, sub);
}

void StreamHub::close_all() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  for (const auto& s : subs_) s->close();
  subs_.clear();
}

std::size_t StreamHub::subscribers() const {
  std::lock_guard lock(mutex_);
  return subs_.size();
}

Service::Service(ServiceConfig config, alerts::SinkList extra_sinks)
    : config_(std::move(config)),
      store_(config_.capacity),
      alert_log_(config_.alert_log_path),
      hub_(config_.stream_queue, config_.stream_replay) {
  config_.validate(!extra_sinks.empty());
  for (const auto& s : config_.sinks) sinks_.push_back(alerts::sink_from_json(s));
  for (auto& s : extra_sinks) sinks_.push_back(std::move(s));
  for (const auto& r : config_.rules) rules_.upsert(r);

  if (config_.persistence_path) {
    if (std::filesystem::exists(*config_.persistence_path)) {
      const auto replay = load_reading_log(*config_.persistence_path);
      for (const auto& r : replay.readings) (void)store_.ingest(r);
      if (replay.skipped_lines > 0) {
        log::warn("skipped ", replay.skipped_lines, " unreadable lines in ", config_.persistence_path->string());
      }
    }
    reading_log_ = std::make_unique<ReadingLog>(*config_.persistence_path);
  }

  if (!sinks_.empty()) {
    dispatcher_ = std::make_unique<alerts::Dispatcher>(
        sinks_, alert_log_, [this](const alerts::AlertLogRecord& record) {
          hub_.publish("alert", alerts::to_json(record).dump());
        });
  }
  store_.subscribe([this](const SensorReading& r) { on_reading(r); });

  http_ = std::make_unique<httplib::Server>();
  http_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

Service::~Service() { stop(); }

void Service::on_reading(const SensorReading& reading) {
  if (reading_log_) reading_log_->append(reading);
  hub_.publish("reading", to_json(reading).dump());
  const auto events = rules_.evaluate(reading);
  if (events.empty()) return;
  if (!dispatcher_) {
    log::warn("dropping ", events.size(), " alert(s): no sinks configured");
    return;
  }
  const auto snapshot = store_.node_snapshot(reading.node_id);
  for (const auto& ev : events) {
    dispatcher_->submit(ev, alerts::format_alert(ev, snapshot, config_.recipients));
  }
}

IngestOutcome Service::ingest(const SensorReading& reading) { return store_.ingest(reading); }

void Service::drain_alerts() {
  if (dispatcher_) dispatcher_->drain();
}

void Service::start() {
  try {
    udp_ = std::make_unique<net::UdpSocket>(config_.listen_udp);
  } catch (const std::exception& e) {
    throw StartupError("cannot bind UDP " + config_.listen_udp.host + ":" +
                       std::to_string(config_.listen_udp.port) + ": " + e.what());
  }
  udp_port_ = udp_->port();

  const auto& h = config_.listen_http;
  if (h.port == 0) {
    const int port = http_->bind_to_any_port(h.host);
    if (port <= 0) throw StartupError("cannot bind HTTP on " + h.host);
    http_port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!http_->bind_to_port(h.host, h.port)) {
      throw StartupError("cannot bind HTTP " + h.host + ":" + std::to_string(h.port));
    }
    http_port_ = h.port;
  }

  running_ = true;
  udp_thread_ = std::thread([this] { udp_loop(); });
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  log::info("listening: udp ", config_.listen_udp.host, ":", udp_port_, ", http ", h.host, ":", http_port_);
}

void Service::udp_loop() {
  while (running_) {
    auto datagram = udp_->receive(std::chrono::milliseconds(100));
    if (!datagram) continue;
    try {
      (void)ingest(codec::decode(*datagram));
    } catch (const codec::DecodeError& e) {
      if (decode_errors_++ % 1000 == 0) log::warn("dropping datagram: ", e.what());
    }
  }
}

void Service::stop() {
  {
    std::lock_guard lock(stop_mutex_);
    if (stopped_) return;
    stopped_ = true;
  }
  running_ = false;
  if (udp_thread_.joinable()) udp_thread_.join();
  hub_.close_all();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (dispatcher_) dispatcher_->shutdown();
  stop_cv_.notify_all();
}

void Service::wait() {
  std::unique_lock lock(stop_mutex_);
  stop_cv_.wait(lock, [&] { return stopped_; });
}

void Service::install_routes() {
  auto& svr = *http_;

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}});
  });

  svr.Get("/sensors", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& r : store_.latest_all()) {
        out.push_back({{"key", alerts::to_json(r.key())},
                       {"unit", unit_of(r.sensor_type)},
                       {"latest", to_json(r)}});
      }
      send_json(res, out);
    });
  });

  svr.Get("/sensors/:node/:type/series", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto key = key_of(req);
      const auto points = store_.query_series(key, range_of(req), max_points_of(req, store_.capacity()));
      send_json(res, {{"key", alerts::to_json(key)}, {"points", points_json(points)}});
    });
  });

  svr.Get("/sensors/:node/:type/summary", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto key = key_of(req);
      auto body = summary_json(store_.summarize(key, range_of(req)));
      body["key"] = alerts::to_json(key);
      send_json(res, body);
    });
  });

  svr.Get("/graphs/:graph", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto graph = gaze::parse_graph_type(req.path_params.at("graph"));
      if (!graph) throw HttpError(404, "unknown graph type '" + req.path_params.at("graph") + "'");
      const auto range = range_of(req);
      const bool triples = *graph == gaze::GraphType::bar || *graph == gaze::GraphType::radar;
      const auto max_points = max_points_of(req, 500);
      const auto rules = rules_.list();

      json sensors = json::array();
      for (const auto& key : store_.keys()) {
        json entry{{"key", alerts::to_json(key)}, {"unit", unit_of(key.sensor_type)}};
        json thresholds = json::array();
        for (const auto& r : rules) {
          if (!r.enabled || !r.selection.covers(key)) continue;
          thresholds.push_back({{"rule_id", r.rule_id},
                                {"comparator", alerts::to_string(r.comparator)},
                                {"threshold", r.threshold}});
        }
        entry["thresholds"] = thresholds;
        if (triples) {
          try {
            const auto s = store_.summarize(key, range);
            entry["low"] = s.low;
            entry["high"] = s.high;
            entry["mean"] = s.mean;
            entry["count"] = s.count;
          } catch (const EmptyWindowError&) {
            continue;
          }
        } else {
          const auto points = store_.query_series(key, range, max_points);
          if (points.empty()) continue;
          entry["series"] = points_json(points);
        }
        sensors.push_back(std::move(entry));
      }
      json window{{"from", range.from_ms}, {"to", range.to_ms}};
      send_json(res, {{"graph_type", gaze::to_string(*graph)}, {"window", window}, {"sensors", sensors}});
    });
  });

  svr.Get("/alerts/rules", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& r : rules_.list()) out.push_back(alerts::to_json(r));
      send_json(res, out);
    });
  });

  svr.Put("/alerts/rules/:id", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      const auto& id = req.path_params.at("id");
      if (!body.is_object()) throw HttpError(400, "rule body must be an object");
      if (body.contains("rule_id") && body.at("rule_id") != id) {
        throw HttpError(400, "rule_id in body does not match the path");
      }
      body["rule_id"] = id;
      auto rule = alerts::rule_from_json(body);
      rule.validate();
      if (rule.enabled && sinks_.empty()) throw ConfigurationError("no alert sinks configured");
      const bool existed = rules_.get(id).has_value();
      rules_.upsert(rule);
      send_json(res, alerts::to_json(rule), existed ? 200 : 201);
    });
  });

  svr.Delete("/alerts/rules/:id", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& id = req.path_params.at("id");
      if (!rules_.remove(id)) throw HttpError(404, "no rule '" + id + "'");
      res.status = 204;
    });
  });

  svr.Post("/alerts/manual", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("selection")) throw HttpError(400, "body needs a 'selection'");
      const auto selection = alerts::selection_from_json(body.at("selection"));
      if (sinks_.empty()) throw ConfigurationError("no alert sinks configured");
      const auto events = alerts::manual_alert(selection, store_, rules_, wall_ms());
      json out = json::array();
      for (const auto& ev : events) {
        const auto snapshot = store_.node_snapshot(ev.key.node_id);
        dispatcher_->submit(ev, alerts::format_alert(ev, snapshot, config_.recipients));
        out.push_back(alerts::to_json(ev));
      }
      send_json(res, {{"events", out}, {"count", events.size()}}, 202);
    });
  });

  svr.Get("/alerts/log", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::size_t limit = 100;
      if (req.has_param("limit")) limit = static_cast<std::size_t>(parse_u64(req.get_param_value("limit"), "limit"));
      json out = json::array();
      for (const auto& r : alert_log_.recent(limit)) out.push_back(alerts::to_json(r));
      send_json(res, {{"total", alert_log_.total()}, {"records", out}});
    });
  });

  svr.Post("/analytics/gaze", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) throw HttpError(400, "expected multipart/form-data");
      const auto gaze_files = req.get_file_values("gaze");
      const auto event_files = req.get_file_values("events");
      if (gaze_files.empty() || gaze_files.size() != event_files.size()) {
        throw HttpError(400, "need matching 'gaze' and 'events' parts");
      }
      gaze::StudyOptions options;
      options.screen = config_.screen;
      if (auto s = optional_field(req, "screen")) options.screen = gaze::parse_screen(*s);
      if (auto s = optional_field(req, "cluster_fixations")) options.cluster_fixations = truthy(*s);
      std::vector<gaze::SessionLog> logs;
      for (std::size_t i = 0; i < gaze_files.size(); ++i) {
        std::istringstream g(gaze_files[i].content), e(event_files[i].content);
        gaze::SessionLog log;
        log.participant_id = gaze_files[i].filename.empty() ? "P" + std::to_string(i + 1)
                                                             : gaze_files[i].filename;
        log.gaze = gaze::read_gaze_csv(g);
        log.questions = gaze::read_events_csv(e);
        logs.push_back(std::move(log));
      }
      send_json(res, gaze::render_report(gaze::study_metrics(logs, options)));
    });
  });

  svr.Post("/analytics/fitts", [](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) throw HttpError(400, "expected multipart/form-data");
      std::istringstream t(file_field(req, "trials"));
      const auto trials = fitts::read_trials_csv(t);
      std::vector<fitts::SubjectiveScore> subjective;
      if (req.has_file("subjective")) {
        std::istringstream s(req.get_file_value("subjective").content);
        subjective = fitts::read_subjective_csv(s);
      }
      fitts::AnalysisOptions options;
      if (auto a = optional_field(req, "alpha")) options.alpha = std::stod(*a);
      if (auto m = optional_field(req, "throughput")) {
        if (*m == "per_trial") {
          options.summary.throughput_mode = fitts::ThroughputMode::per_trial;
        } else if (*m != "per_id") {
          throw HttpError(400, "throughput must be per_id or per_trial");
        }
      }
      if (auto x = optional_field(req, "exclude_errors")) options.summary.exclude_error_trials = truthy(*x);
      if (auto p = optional_field(req, "paired")) {
        if (truthy(*p)) options.ttest_mode = fitts::TTestMode::paired;
      }
      send_json(res, fitts::analyze(trials, subjective, options));
    });
  });

  svr.Get("/stream", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint64_t> last;
    const auto header = req.get_header_value("Last-Event-ID");
    if (!header.empty()) {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(header.data(), header.data() + header.size(), v);
      if (ec == std::errc{} && ptr == header.data() + header.size()) last = v;
    }
    auto sub = hub_.subscribe(last);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub](std::size_t, httplib::DataSink& sink) {
          auto ev = sub->next(std::chrono::milliseconds(1000));
          if (sub->closed()) return false;
          const std::string chunk = ev ? format_sse(*ev) : std::string(": keepalive\n\n");
          return sink.write(chunk.data(), chunk.size());
        },
        [this, sub](bool) { hub_.unsubscribe(sub); });
  });
}

}  // namespace sensordash::service
