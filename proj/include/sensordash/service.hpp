#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sensordash/alerts.hpp"
#include "sensordash/gaze.hpp"
#include "sensordash/net.hpp"
#include "sensordash/persistence.hpp"
#include "sensordash/sinks.hpp"
#include "sensordash/store.hpp"

namespace httplib {
class Server;
}

namespace sensordash::service {

using alerts::ConfigurationError;

class StartupError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  net::Endpoint listen_udp{"0.0.0.0", 9000};
  net::Endpoint listen_http{"127.0.0.1", 8080};
  std::vector<nlohmann::json> sinks;
  std::vector<std::string> recipients;
  std::vector<alerts::AlertRule> rules;
  std::optional<std::filesystem::path> persistence_path;
  std::optional<std::filesystem::path> alert_log_path;
  gaze::ScreenSize screen;
  std::size_t capacity = kDefaultSeriesCapacity;
  /// Per-client stream backlog; older events are dropped past this.
  std::size_t stream_queue = 256;
  /// Alert events kept for Last-Event-ID resumption.
  std::size_t stream_replay = 1000;

  /// Ports distinct (0 means "any free port" and is exempt); a sink must
  /// exist when any rule is enabled unless `sinks_supplied` says the caller
  /// provides its own. Throws ConfigurationError.
  void validate(bool sinks_supplied = false) const;
};

[[nodiscard]] ServiceConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] ServiceConfig load_config(const std::filesystem::path& path);

struct StreamEvent {
  std::uint64_t id = 0;
  std::string type;
  std::string data;
};

/// "id: ..\nevent: ..\ndata: ..\n\n"
[[nodiscard]] std::string format_sse(const StreamEvent& event);

/// Fan-out of stream events to subscribers with bounded, drop-oldest queues.
class StreamHub {
public:
  class Subscription {
  public:
    explicit Subscription(std::size_t limit) : limit_(limit) {}

    /// Waits up to `timeout`; nullopt on timeout or once closed.
    std::optional<StreamEvent> next(std::chrono::milliseconds timeout);
    [[nodiscard]] bool closed() const;
    [[nodiscard]] std::size_t dropped() const;

  private:
    friend class StreamHub;
    void push(const StreamEvent& event);
    void close();

    std::size_t limit_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<StreamEvent> queue_;
    std::size_t dropped_ = 0;
    bool closed_ = false;
  };

  StreamHub(std::size_t queue_limit, std::size_t replay_limit);

  std::uint64_t publish(const std::string& type, const std::string& data);
  /// Queues retained alert events newer than `last_event_id` before any live event.
  [[nodiscard]] std::shared_ptr<Subscription> subscribe(std::optional<std::uint64_t> last_event_id);
  void unsubscribe(const std::shared_ptr<Subscription>& sub);
  void close_all();
  [[nodiscard]] std::size_t subscribers() const;

private:
  std::size_t queue_limit_;
  std::size_t replay_limit_;
  mutable std::mutex mutex_;
  std::uint64_t next_id_ = 1;
  std::deque<StreamEvent> replay_;
  std::vector<std::shared_ptr<Subscription>> subs_;
  bool closed_ = false;
};

/// UDP ingest, alert evaluation and dispatch, and the HTTP/SSE API.
class Service {
public:
  /// `extra_sinks` are appended to the configured ones.
  explicit Service(ServiceConfig config, alerts::SinkList extra_sinks = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds both listeners. Throws StartupError when a port cannot be bound.
  void start();
  /// Stops listeners, closes streams and drains pending alert deliveries.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  [[nodiscard]] std::uint16_t udp_port() const noexcept { return udp_port_; }
  [[nodiscard]] std::uint16_t http_port() const noexcept { return http_port_; }

  /// Same path as a decoded datagram.
  IngestOutcome ingest(const SensorReading& reading);

  [[nodiscard]] TelemetryStore& store() noexcept { return store_; }
  [[nodiscard]] alerts::RuleSet& rules() noexcept { return rules_; }
  [[nodiscard]] alerts::AlertLog& alert_log() noexcept { return alert_log_; }
  [[nodiscard]] StreamHub& hub() noexcept { return hub_; }
  [[nodiscard]] std::size_t decode_errors() const noexcept { return decode_errors_; }
  /// Waits until queued alert deliveries are logged.
  void drain_alerts();

private:
  void on_reading(const SensorReading& reading);
  void udp_loop();
  void install_routes();

  ServiceConfig config_;
  TelemetryStore store_;
  alerts::RuleSet rules_;
  alerts::SinkList sinks_;
  alerts::AlertLog alert_log_;
  StreamHub hub_;
  std::unique_ptr<ReadingLog> reading_log_;
  std::unique_ptr<alerts::Dispatcher> dispatcher_;
  std::unique_ptr<httplib::Server> http_;
  std::unique_ptr<net::UdpSocket> udp_;
  std::thread udp_thread_;
  std::thread http_thread_;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> decode_errors_{0};
  std::uint16_t udp_port_ = 0;
  std::uint16_t http_port_ = 0;
  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stopped_ = false;
};

}  // namespace sensordash::service
