#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "sensordash/codec.hpp"
#include "sensordash/node_sim.hpp"
#include "sensordash/service.hpp"
#include "support/fixtures.hpp"

using namespace sensordash;
using namespace sensordash::service;
using nlohmann::json;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "sensordash-tests";
  std::filesystem::create_directories(dir);
  auto p = dir / (name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove(p);
  return p;
}

ServiceConfig local_config() {
  ServiceConfig c;
  c.listen_udp = {"127.0.0.1", 0};
  c.listen_http = {"127.0.0.1", 0};
  return c;
}

struct Running {
  explicit Running(ServiceConfig config, alerts::SinkList sinks = {})
      : svc(std::move(config), std::move(sinks)) {
    svc.start();
    client = std::make_unique<httplib::Client>("127.0.0.1", svc.http_port());
    client->set_read_timeout(5, 0);
  }
  ~Running() { svc.stop(); }

  json get(const std::string& path, int expect = 200) {
    auto res = client->Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    return res->body.empty() ? json() : json::parse(res->body);
  }

  Service svc;
  std::unique_ptr<httplib::Client> client;
};

std::shared_ptr<alerts::CallbackSink> recorder(std::vector<alerts::AlertMessage>& out, std::mutex& m) {
  return std::make_shared<alerts::CallbackSink>("recorder", [&](const alerts::AlertMessage& msg, const alerts::AlertEvent&) {
    std::lock_guard lock(m);
    out.push_back(msg);
  });
}

SensorReading reading(std::string node, SensorType type, std::uint32_t seq, std::uint64_t ts, double v) {
  return {std::move(node), type, seq, ts, v};
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const auto c = config_from_json(json::parse(R"({
    "listen_udp": "127.0.0.1:9100", "listen_http": "127.0.0.1:8100",
    "sinks": [{"type": "file", "path": "/tmp/a.jsonl"}],
    "recipients": ["ops@example.com"],
    "rules": [{"rule_id": "hot", "selection": {"kind": "all"}, "comparator": "above", "threshold": 30}],
    "screen": "1920x1080", "capacity": 100})"));
  CHECK(c.listen_udp.port == 9100);
  CHECK(c.rules.size() == 1);
  CHECK(c.screen.width == 1920);
  CHECK(c.capacity == 100);

  CHECK_THROWS_AS((void)config_from_json(json::parse(R"({"listen_udp": "0.0.0.0:9000", "listen_http": "0.0.0.0:9000"})")),
                  ConfigurationError);
  CHECK_THROWS_AS((void)config_from_json(json::parse(
                      R"({"rules": [{"selection": {"kind": "all"}, "comparator": "above", "threshold": 1}]})")),
                  ConfigurationError);
  CHECK_THROWS_AS((void)config_from_json(json::parse(R"({"sinks": [{"type": "pigeon"}]})")), ConfigurationError);
  CHECK_THROWS_AS((void)config_from_json(json::parse(R"({"capacity": 0})")), ConfigurationError);
  CHECK_THROWS_AS((void)config_from_json(json::parse(R"({"listen_http": "nonsense"})")), ConfigurationError);
  CHECK_THROWS_AS((void)config_from_json(json::array()), ConfigurationError);
  CHECK_THROWS_AS((void)load_config("/nonexistent/config.json"), ConfigurationError);

  auto zero = local_config();
  CHECK_NOTHROW(zero.validate());
}

TEST_CASE("sse framing") {
  CHECK(format_sse({7, "reading", "{\"a\":1}"}) == "id: 7\nevent: reading\ndata: {\"a\":1}\n\n");
  CHECK(format_sse({8, "alert", "x\ny"}) == "id: 8\nevent: alert\ndata: x\ndata: y\n\n");
}

TEST_CASE("stream hub fan-out, drop-oldest and replay") {
  StreamHub hub(3, 2);
  auto a = hub.subscribe(std::nullopt);
  auto b = hub.subscribe(std::nullopt);
  CHECK(hub.subscribers() == 2);
  for (int i = 0; i < 5; ++i) (void)hub.publish("reading", std::to_string(i));
  CHECK(a->dropped() == 2);
  auto first = a->next(std::chrono::milliseconds(10));
  REQUIRE(first);
  CHECK(first->data == "2");
  CHECK(b->next(std::chrono::milliseconds(10))->id == 3);

  const auto id1 = hub.publish("alert", "a1");
  const auto id2 = hub.publish("alert", "a2");
  const auto id3 = hub.publish("alert", "a3");
  CHECK(id3 == id2 + 1);
  auto late = hub.subscribe(id1);
  auto e = late->next(std::chrono::milliseconds(10));
  REQUIRE(e);
  CHECK(e->id == id2);
  CHECK(late->next(std::chrono::milliseconds(10))->id == id3);
  CHECK_FALSE(late->next(std::chrono::milliseconds(10)).has_value());
  auto fresh = hub.subscribe(std::nullopt);
  CHECK_FALSE(fresh->next(std::chrono::milliseconds(10)).has_value());

  hub.unsubscribe(b);
  CHECK(hub.subscribers() == 3);
  hub.close_all();
  CHECK(a->closed());
  CHECK(hub.subscribe(std::nullopt)->closed());
}

TEST_CASE("health, sensors, series and summary") {
  Running r(local_config());
  CHECK(r.get("/healthz") == json{{"status", "ok"}});
  CHECK(r.get("/sensors") == json::array());

  for (std::uint32_t i = 0; i < 100; ++i) {
    (void)r.svc.ingest(reading("lab-a", SensorType::temperature, i, 1000ull * (i + 1), i + 1.0));
  }
  (void)r.svc.ingest(reading("lab-b", SensorType::light, 0, 5000, 431.25));
  const auto sensors = r.get("/sensors");
  REQUIRE(sensors.size() == 2);
  CHECK(sensors[0]["key"]["node_id"] == "lab-a");
  CHECK(sensors[0]["unit"] == "C");
  CHECK(sensors[0]["latest"]["value"] == 100.0);

  const auto series = r.get("/sensors/lab-a/temperature/series?max_points=10");
  REQUIRE(series["points"].size() == 10);
  CHECK(series["points"][0]["value"] == 5.5);
  CHECK(r.get("/sensors/lab-a/temperature/series")["points"].size() == 100);
  CHECK(r.get("/sensors/lab-a/temperature/series?from=2000&to=4000")["points"].size() == 3);

  const auto summary = r.get("/sensors/lab-a/temperature/summary?from=1000&to=3000");
  CHECK(summary["low"] == 1.0);
  CHECK(summary["high"] == 3.0);
  CHECK(summary["mean"] == 2.0);
  CHECK(summary["count"] == 3);

  r.get("/sensors/lab-z/temperature/series", 404);
  r.get("/sensors/lab-a/pressure/series", 404);
  r.get("/sensors/lab-a/temperature/series?max_points=abc", 400);
  r.get("/sensors/lab-a/temperature/summary?from=999999", 422);
}

TEST_CASE("graph payloads") {
  auto cfg = local_config();
  cfg.rules.push_back({"hot", alerts::Selection::all(), alerts::Comparator::above, 30, true});
  std::vector<alerts::AlertMessage> got;
  std::mutex m;
  Running r(cfg, {recorder(got, m)});
  for (std::uint32_t i = 0; i < 20; ++i) {
    (void)r.svc.ingest(reading("n1", SensorType::humidity, i, 1000ull * i, 40.0 + i));
    (void)r.svc.ingest(reading("n2", SensorType::light, i, 1000ull * i, 100.0 * i));
  }
  for (const char* g : {"bar", "radar"}) {
    const auto body = r.get(std::string("/graphs/") + g);
    CHECK(body["graph_type"] == g);
    REQUIRE(body["sensors"].size() == 2);
    const auto& s = body["sensors"][0];
    const auto expect = r.svc.store().summarize({"n1", SensorType::humidity}, {});
    CHECK(s["low"] == expect.low);
    CHECK(s["high"] == expect.high);
    CHECK(s["mean"] == expect.mean);
    CHECK(s["thresholds"][0]["threshold"] == 30.0);
  }
  for (const char* g : {"line", "area"}) {
    const auto body = r.get(std::string("/graphs/") + g + "?max_points=5");
    REQUIRE(body["sensors"].size() == 2);
    CHECK(body["sensors"][1]["series"].size() == 5);
  }
  CHECK(r.get("/graphs/bar?from=100000")["sensors"].empty());
  r.get("/graphs/pie", 404);
}

TEST_CASE("rule management and alert delivery") {
  const auto file = temp_path("svc-alerts.jsonl");
  auto cfg = local_config();
  cfg.sinks.push_back({{"type", "file"}, {"path", file.string()}});
  cfg.recipients = {"ops@example.com"};
  Running r(cfg);

  const json rule = {{"selection", {{"kind", "one"}, {"key", {{"node_id", "lab-a"}, {"sensor_type", "temperature"}}}}},
                     {"comparator", "above"},
                     {"threshold", 30}};
  auto res = r.client->Put("/alerts/rules/hot", rule.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  res = r.client->Put("/alerts/rules/hot", rule.dump(), "application/json");
  CHECK(res->status == 200);
  CHECK(r.get("/alerts/rules").size() == 1);

  json mismatch = rule;
  mismatch["rule_id"] = "cold";
  CHECK(r.client->Put("/alerts/rules/hot", mismatch.dump(), "application/json")->status == 400);
  CHECK(r.client->Put("/alerts/rules/x", "{not json", "application/json")->status == 400);
  json empty_subset = rule;
  empty_subset["selection"] = {{"kind", "subset"}, {"keys", json::array()}};
  CHECK(r.client->Put("/alerts/rules/x", empty_subset.dump(), "application/json")->status == 400);

  for (std::uint32_t i = 0; i < 6; ++i) {
    const double v = (i == 2 || i == 3 || i == 5) ? 31.0 : 29.0;
    (void)r.svc.ingest(reading("lab-a", SensorType::temperature, i, 1000ull * i, v));
  }
  (void)r.svc.ingest(reading("lab-a", SensorType::humidity, 0, 1000, 40));
  r.svc.drain_alerts();
  auto log = r.get("/alerts/log");
  CHECK(log["total"] == 2);
  CHECK(log["records"][0]["subject"] == "ALERT: temperature threshold crossed on lab-a");
  CHECK(log["records"][0]["results"][0]["ok"] == true);
  CHECK(r.get("/alerts/log?limit=1")["records"].size() == 1);

  res = r.client->Post("/alerts/manual", json{{"selection", {{"kind", "all"}}}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 202);
  CHECK(json::parse(res->body)["count"] == 2);
  res = r.client->Post("/alerts/manual",
                       json{{"selection", {{"kind", "one"}, {"key", {{"node_id", "zz"}, {"sensor_type", "light"}}}}}}.dump(),
                       "application/json");
  CHECK(res->status == 422);
  CHECK(r.client->Post("/alerts/manual", "{}", "application/json")->status == 400);
  r.svc.drain_alerts();
  CHECK(r.get("/alerts/log")["total"] == 4);

  std::ifstream in(file);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = json::parse(line);
    CHECK(j["recipients"][0] == "ops@example.com");
    ++lines;
  }
  CHECK(lines == 4);

  CHECK(r.client->Delete("/alerts/rules/hot")->status == 204);
  CHECK(r.client->Delete("/alerts/rules/hot")->status == 404);
  std::filesystem::remove(file);
}

TEST_CASE("alerts need a sink") {
  Running r(local_config());
  const json rule = {{"selection", {{"kind", "all"}}}, {"comparator", "below"}, {"threshold", 0}};
  CHECK(r.client->Put("/alerts/rules/a", rule.dump(), "application/json")->status == 422);
  json disabled = rule;
  disabled["enabled"] = false;
  CHECK(r.client->Put("/alerts/rules/a", disabled.dump(), "application/json")->status == 201);
  (void)r.svc.ingest(reading("n", SensorType::flood, 0, 1, 3));
  CHECK(r.client->Post("/alerts/manual", json{{"selection", {{"kind", "all"}}}}.dump(), "application/json")->status ==
        422);
}

TEST_CASE("udp ingest counts malformed datagrams") {
  Running r(local_config());
  sim::UdpEmitter e("127.0.0.1", r.svc.udp_port());
  REQUIRE(e.send(codec::encode(reading("n1", SensorType::smoke, 0, 10, 12.5))));
  REQUIRE(e.send("SDV9|n1|smoke|1|11|1"));
  REQUIRE(e.send("SDV1|n1|smoke|2|12|NaN"));
  for (int i = 0; i < 200 && (r.svc.decode_errors() < 2 || !r.svc.store().contains({"n1", SensorType::smoke})); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(r.svc.decode_errors() == 2);
  CHECK(r.svc.store().latest({"n1", SensorType::smoke})->value == 12.5);
}

TEST_CASE("start fails on an occupied port") {
  Running first(local_config());
  auto cfg = local_config();
  cfg.listen_http.port = first.svc.http_port();
  Service second(cfg);
  CHECK_THROWS_AS(second.start(), StartupError);

  auto udp = local_config();
  udp.listen_udp.port = first.svc.udp_port();
  Service third(udp);
  CHECK_THROWS_AS(third.start(), StartupError);
}

TEST_CASE("analytics endpoints") {
  Running r(local_config());

  std::ostringstream trials, subj;
  trials << "participant_id,feedback,A,W,rep,movement_time_ms,error_distance\n";
  subj << "participant_id,feedback,sus,tlx\n";
  std::vector<fitts::TrialRecord> t;
  std::vector<fitts::SubjectiveScore> s;
  fixture::table2(t, s);
  for (const auto& x : t) {
    trials << x.participant_id << "," << fitts::to_string(x.feedback) << "," << x.amplitude << "," << x.width << ","
           << x.rep << "," << std::setprecision(17) << x.movement_time_ms << "," << x.error_distance << "\n";
  }
  for (const auto& x : s) {
    subj << x.participant_id << "," << fitts::to_string(x.feedback) << "," << std::setprecision(17) << x.sus << ","
         << x.tlx << "\n";
  }
  httplib::MultipartFormDataItems items{{"trials", trials.str(), "trials.csv", "text/csv"},
                                        {"subjective", subj.str(), "subjective.csv", "text/csv"},
                                        {"alpha", "0.01", "", ""}};
  auto res = r.client->Post("/analytics/fitts", items);
  REQUIRE(res);
  REQUIRE(res->status == 200);
  const auto report = json::parse(res->body);
  CHECK(report["table"]["rows"][0]["cells"][0] == "665.01 (94.52)");
  CHECK(report["table"]["rows"][3]["cells"][3] == "78.33 (13)");

  httplib::MultipartFormDataItems broken{{"trials", "participant_id,feedback\nP1,none\n", "t.csv", "text/csv"}};
  CHECK(r.client->Post("/analytics/fitts", broken)->status == 400);
  httplib::MultipartFormDataItems bad_mode{{"trials", trials.str(), "t.csv", "text/csv"}, {"throughput", "fast", "", ""}};
  CHECK(r.client->Post("/analytics/fitts", bad_mode)->status == 400);
  CHECK(r.client->Post("/analytics/fitts", "{}", "application/json")->status == 400);

  std::ostringstream events;
  events << "graph_type,question_id,answer,correct,start_ms,end_ms\n";
  std::uint64_t clock = 0;
  for (const char* g : {"bar", "line", "radar", "area"}) {
    for (int q = 1; q <= 5; ++q) {
      events << g << "," << q << ",A," << (q <= 3 ? "true" : "false") << "," << clock << "," << clock + 10000 << "\n";
      clock += 10000;
    }
  }
  std::ostringstream gaze;
  gaze << "timestamp_ms,x,y\n";
  const auto m = fixture::mixture(3, 40, 6.0, 300.0, 3);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    gaze << i * 400 << "," << std::clamp(m.points[i].x, 0.0, 1365.0) << "," << std::clamp(m.points[i].y, 0.0, 767.0)
         << "\n";
  }
  httplib::MultipartFormDataItems g{{"gaze", gaze.str(), "alice", "text/csv"},
                                    {"events", events.str(), "alice-events", "text/csv"}};
  res = r.client->Post("/analytics/gaze", g);
  REQUIRE(res);
  REQUIRE(res->status == 200);
  const auto gr = json::parse(res->body);
  CHECK(gr["table"]["rows"][0]["cells"][0] == "3");
  CHECK(gr["table"]["rows"][1]["cells"][0] == "10");
  CHECK(gr["table"]["rows"][2]["cells"][0] == "50");
  CHECK(gr["participants"][0]["participant_id"] == "alice");

  httplib::MultipartFormDataItems unmatched{{"gaze", gaze.str(), "a", "text/csv"}};
  CHECK(r.client->Post("/analytics/gaze", unmatched)->status == 400);
  std::string short_events = "graph_type,question_id,answer,correct,start_ms,end_ms\nbar,1,A,1,0,10\n";
  httplib::MultipartFormDataItems incomplete{{"gaze", gaze.str(), "a", "text/csv"},
                                             {"events", short_events, "e", "text/csv"}};
  CHECK(r.client->Post("/analytics/gaze", incomplete)->status == 400);
}

TEST_CASE("stream delivers readings and alerts, resuming from Last-Event-ID") {
  std::vector<alerts::AlertMessage> got;
  std::mutex m;
  auto cfg = local_config();
  cfg.rules.push_back({"hot", alerts::Selection::all(), alerts::Comparator::above, 30, true});
  Running r(cfg, {recorder(got, m)});

  std::mutex text_mutex;
  std::string text;
  std::atomic<bool> stop{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", r.svc.http_port());
    c.set_read_timeout(5, 0);
    c.Get("/stream", [&](const char* data, std::size_t len) {
      std::lock_guard lock(text_mutex);
      text.append(data, len);
      return !stop.load();
    });
  });
  for (int i = 0; i < 200 && r.svc.hub().subscribers() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  REQUIRE(r.svc.hub().subscribers() == 1);

  (void)r.svc.ingest(reading("n1", SensorType::temperature, 0, 1, 25));
  (void)r.svc.ingest(reading("n1", SensorType::temperature, 1, 2, 35));
  r.svc.drain_alerts();
  auto has_alert = [&] {
    std::lock_guard lock(text_mutex);
    return text.find("event: alert") != std::string::npos;
  };
  for (int i = 0; i < 400 && !has_alert(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  stop = true;
  (void)r.svc.ingest(reading("n1", SensorType::temperature, 2, 3, 20));
  reader.join();
  {
    std::lock_guard lock(text_mutex);
    CHECK(text.find("event: reading") != std::string::npos);
    CHECK(text.find("event: alert") != std::string::npos);
    CHECK(text.find("\"rule_id\":\"hot\"") != std::string::npos);
    CHECK(text.find("id: 1\n") != std::string::npos);
  }

  std::string resumed;
  httplib::Client c("127.0.0.1", r.svc.http_port());
  c.set_read_timeout(5, 0);
  c.Get("/stream", httplib::Headers{{"Last-Event-ID", "0"}}, [&](const char* data, std::size_t len) {
    resumed.append(data, len);
    return resumed.find("\n\n") == std::string::npos;
  });
  CHECK(resumed.find("event: alert") != std::string::npos);
  CHECK(resumed.find("event: reading") == std::string::npos);
}

TEST_CASE("stored readings survive a restart without re-alerting") {
  const auto persist = temp_path("readings.jsonl");
  std::vector<alerts::AlertMessage> got;
  std::mutex m;
  auto cfg = local_config();
  cfg.persistence_path = persist;
  cfg.rules.push_back({"hot", alerts::Selection::all(), alerts::Comparator::above, 30, true});
  {
    Running r(cfg, {recorder(got, m)});
    for (std::uint32_t i = 0; i < 10; ++i) {
      (void)r.svc.ingest(reading("n1", SensorType::temperature, i, 1000ull * i, 25.0 + i));
    }
    r.svc.drain_alerts();
  }
  CHECK(got.size() == 1);
  {
    Running r(cfg, {recorder(got, m)});
    CHECK(r.svc.store().series_size({"n1", SensorType::temperature}) == 10);
    CHECK(r.get("/sensors/n1/temperature/summary")["high"] == 34.0);
    r.svc.drain_alerts();
  }
  CHECK(got.size() == 1);
  std::filesystem::remove(persist);
}
