#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sensordash/sensor_types.hpp"

namespace sensordash::sim {

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
};

/// Physical output range of each sensor kind. Light is the BH1750 16-bit
/// converter range, humidity is relative percent.
[[nodiscard]] ValueRange physical_range(SensorType type) noexcept;

/// Sinusoid + Gaussian noise signal model for one sensor.
struct SensorModel {
  SensorType sensor_type = SensorType::temperature;
  double baseline = 0.0;
  double amplitude = 0.0;
  double period_s = 60.0;
  double noise_sd = 0.0;
  /// Intersected with physical_range() before use.
  ValueRange clamp{-1e12, 1e12};

  /// Throws ValidationError on a non-positive period, negative noise or an empty clamp.
  void validate() const;
  [[nodiscard]] ValueRange effective_clamp() const noexcept;
};

struct ScheduledEvent {
  SensorType sensor_type = SensorType::temperature;
  double offset = 0.0;
  double start_s = 0.0;
  double duration_s = 0.0;
};

struct NodeConfig {
  std::string node_id;
  std::vector<SensorModel> sensors;
  std::string target_host = "127.0.0.1";
  std::uint16_t target_port = 0;
  double rate_hz = 1.0;
  std::uint64_t seed = 1;
  /// Events known ahead of time, e.g. from a scenario file.
  std::vector<ScheduledEvent> events;

  void validate() const;
};

[[nodiscard]] SensorModel sensor_model_from_json(const nlohmann::json& j);
[[nodiscard]] NodeConfig node_config_from_json(const nlohmann::json& j);
/// Accepts either a single node object or `{"nodes": [...]}`.
[[nodiscard]] std::vector<NodeConfig> node_configs_from_json(const nlohmann::json& j);

/// clamp(baseline + amplitude*sin(2*pi*t/period) + N(0, noise_sd) + event_offset).
/// No random number is drawn when noise_sd is zero.
[[nodiscard]] double sample_sensor(const SensorModel& model, double t_s, std::mt19937_64& rng,
                                   double event_offset = 0.0);

class Clock {
public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual std::uint64_t now_ms() = 0;
  /// Returns false if `stop` was requested before the deadline.
  virtual bool sleep_until_ms(std::uint64_t deadline_ms, std::stop_token stop) = 0;
};

/// Wall clock (Unix ms).
class SystemClock final : public Clock {
public:
  std::uint64_t now_ms() override;
  bool sleep_until_ms(std::uint64_t deadline_ms, std::stop_token stop) override;
};

/// Virtual time: sleeping jumps straight to the deadline.
class SimulatedClock final : public Clock {
public:
  explicit SimulatedClock(std::uint64_t start_ms = 0) : now_(start_ms) {}
  std::uint64_t now_ms() override { return now_.load(); }
  bool sleep_until_ms(std::uint64_t deadline_ms, std::stop_token stop) override;
  void advance_ms(std::uint64_t delta) { now_ += delta; }

private:
  std::atomic<std::uint64_t> now_;
};

class Emitter {
public:
  virtual ~Emitter() = default;
  /// Returns false on a send failure; never throws.
  virtual bool send(std::string_view datagram) = 0;
};

class UdpEmitter final : public Emitter {
public:
  UdpEmitter(const std::string& host, std::uint16_t port);
  ~UdpEmitter() override;
  UdpEmitter(const UdpEmitter&) = delete;
  UdpEmitter& operator=(const UdpEmitter&) = delete;

  bool send(std::string_view datagram) override;

private:
  int fd_ = -1;
  std::vector<unsigned char> addr_;
};

/// Keeps every datagram in memory; used for packet-log captures.
class CaptureEmitter final : public Emitter {
public:
  bool send(std::string_view datagram) override;
  [[nodiscard]] std::vector<std::string> datagrams() const;

private:
  mutable std::mutex mutex_;
  std::vector<std::string> log_;
};

struct RunStats {
  std::uint64_t ticks = 0;
  std::uint64_t sent = 0;
  std::uint64_t failed = 0;
};

/// One simulated IoT node. `run` is the periodic task; `inject_event` may be
/// called from any thread and takes effect from the next tick.
class Node {
public:
  explicit Node(NodeConfig config);

  /// Adds `offset` to `sensor_type` for `duration_s` starting at the next tick.
  /// Overlapping events sum. Throws ValidationError if the node has no such sensor.
  void inject_event(SensorType sensor_type, double offset, double duration_s);
  void schedule_event(const ScheduledEvent& event);

  /// Samples every sensor at elapsed time `t_s` and assigns the next sequence numbers.
  [[nodiscard]] std::vector<SensorReading> tick(double t_s, std::uint64_t timestamp_ms);

  /// Emits one datagram per sensor every 1/rate_hz seconds until `stop` is
  /// requested or `duration_s` (if positive) has elapsed. Send failures are
  /// logged and counted; the next tick proceeds normally.
  RunStats run(Clock& clock, Emitter& emitter, std::stop_token stop, double duration_s = 0.0);

  [[nodiscard]] const NodeConfig& config() const noexcept { return config_; }

private:
  [[nodiscard]] double active_offset(SensorType type, double t_s) const;

  NodeConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> next_seq_;
  std::atomic<double> next_tick_s_{0.0};
  mutable std::mutex events_mutex_;
  std::vector<ScheduledEvent> events_;
};

}  // namespace sensordash::sim
