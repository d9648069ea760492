#include "sensordash/node_sim.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <numbers>

#include "sensordash/codec.hpp"
#include "sensordash/log.hpp"
#include "sensordash/net.hpp"

namespace sensordash::sim {

ValueRange physical_range(SensorType type) noexcept {
  switch (type) {
    case SensorType::light: return {0.0, 65535.0};
    case SensorType::temperature: return {-55.0, 125.0};
    case SensorType::humidity: return {0.0, 100.0};
    case SensorType::smoke: return {0.0, 10000.0};
    case SensorType::flood: return {0.0, 1023.0};
  }
  return {0.0, 0.0};
}

void SensorModel::validate() const {
  if (!(period_s > 0.0) || !std::isfinite(period_s)) throw ValidationError("period_s must be > 0");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be >= 0");
  if (!std::isfinite(baseline) || !std::isfinite(amplitude)) {
    throw ValidationError("baseline and amplitude must be finite");
  }
  const auto r = effective_clamp();
  if (!(r.min <= r.max)) throw ValidationError("clamp range does not overlap the sensor range");
}

ValueRange SensorModel::effective_clamp() const noexcept {
  const auto phys = physical_range(sensor_type);
  return {std::max(clamp.min, phys.min), std::min(clamp.max, phys.max)};
}

void NodeConfig::validate() const {
  if (!is_valid_identifier(node_id)) throw ValidationError("invalid node_id '" + node_id + "'");
  if (sensors.empty()) throw ValidationError("node " + node_id + " has no sensors");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ValidationError("rate_hz must be > 0");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    sensors[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (sensors[j].sensor_type == sensors[i].sensor_type) {
        throw ValidationError("duplicate sensor type on node " + node_id);
      }
    }
  }
}

namespace {

SensorType sensor_type_field(const nlohmann::json& j, const char* name) {
  const auto type = parse_sensor_type(j.at(name).get<std::string>());
  if (!type) throw ValidationError("unknown sensor type '" + j.at(name).get<std::string>() + "'");
  return *type;
}

}  // namespace

SensorModel sensor_model_from_json(const nlohmann::json& j) {
  try {
    SensorModel m;
    m.sensor_type = sensor_type_field(j, j.contains("type") ? "type" : "sensor_type");
    m.baseline = j.value("baseline", 0.0);
    m.amplitude = j.value("amplitude", 0.0);
    m.period_s = j.value("period_s", 60.0);
    m.noise_sd = j.value("noise_sd", 0.0);
    if (j.contains("clamp")) {
      const auto& c = j.at("clamp");
      m.clamp = {c.at(0).get<double>(), c.at(1).get<double>()};
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad sensor model: ") + e.what());
  }
}

NodeConfig node_config_from_json(const nlohmann::json& j) {
  try {
    NodeConfig c;
    c.node_id = j.at("node_id").get<std::string>();
    for (const auto& s : j.at("sensors")) c.sensors.push_back(sensor_model_from_json(s));
    if (j.contains("target")) {
      const auto ep = net::parse_endpoint(j.at("target").get<std::string>());
      c.target_host = ep.host;
      c.target_port = ep.port;
    }
    c.rate_hz = j.value("rate_hz", 1.0);
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("events")) {
      for (const auto& e : j.at("events")) {
        c.events.push_back({sensor_type_field(e, "sensor_type"), e.at("offset").get<double>(),
                            e.value("start_s", 0.0), e.at("duration_s").get<double>()});
      }
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad node config: ") + e.what());
  }
}

std::vector<NodeConfig> node_configs_from_json(const nlohmann::json& j) {
  std::vector<NodeConfig> out;
  if (j.contains("nodes")) {
    for (const auto& n : j.at("nodes")) out.push_back(node_config_from_json(n));
  } else {
    out.push_back(node_config_from_json(j));
  }
  return out;
}

double sample_sensor(const SensorModel& model, double t_s, std::mt19937_64& rng,
                     double event_offset) {
  double value = model.baseline + event_offset;
  if (model.amplitude != 0.0) {
    value += model.amplitude * std::sin(2.0 * std::numbers::pi * t_s / model.period_s);
  }
  if (model.noise_sd > 0.0) {
    value += std::normal_distribution<double>(0.0, model.noise_sd)(rng);
  }
  const auto r = model.effective_clamp();
  return std::clamp(value, r.min, r.max);
}

std::uint64_t SystemClock::now_ms() {
  using namespace std::chrono;
  return static_cast<std::uint64_t>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

bool SystemClock::sleep_until_ms(std::uint64_t deadline_ms, std::stop_token stop) {
  const auto now = now_ms();
  if (deadline_ms > now) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, std::chrono::milliseconds(deadline_ms - now), [] { return false; });
  }
  return !stop.stop_requested();
}

bool SimulatedClock::sleep_until_ms(std::uint64_t deadline_ms, std::stop_token stop) {
  auto current = now_.load();
  while (current < deadline_ms && !now_.compare_exchange_weak(current, deadline_ms)) {
  }
  return !stop.stop_requested();
}

UdpEmitter::UdpEmitter(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const auto port_str = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(res->ai_addr);
  addr_.assign(bytes, bytes + res->ai_addrlen);
  ::freeaddrinfo(res);
}

UdpEmitter::~UdpEmitter() {
  if (fd_ >= 0) ::close(fd_);
}

bool UdpEmitter::send(std::string_view datagram) {
  const auto n = ::sendto(fd_, datagram.data(), datagram.size(), 0,
                          reinterpret_cast<const sockaddr*>(addr_.data()),
                          static_cast<socklen_t>(addr_.size()));
  return n == static_cast<ssize_t>(datagram.size());
}

bool CaptureEmitter::send(std::string_view datagram) {
  std::lock_guard lock(mutex_);
  log_.emplace_back(datagram);
  return true;
}

std::vector<std::string> CaptureEmitter::datagrams() const {
  std::lock_guard lock(mutex_);
  return log_;
}

Node::Node(NodeConfig config)
    : config_(std::move(config)), rng_(config_.seed), next_seq_(config_.sensors.size(), 0) {
  config_.validate();
  for (const auto& e : config_.events) schedule_event(e);
}

void Node::schedule_event(const ScheduledEvent& event) {
  const bool present = std::any_of(config_.sensors.begin(), config_.sensors.end(),
                                   [&](const SensorModel& m) { return m.sensor_type == event.sensor_type; });
  if (!present) {
    throw ValidationError("node " + config_.node_id + " has no " +
                          std::string(to_string(event.sensor_type)) + " sensor");
  }
  if (!std::isfinite(event.offset) || !(event.duration_s >= 0.0)) {
    throw ValidationError("event offset must be finite and duration non-negative");
  }
  std::lock_guard lock(events_mutex_);
  events_.push_back(event);
}

void Node::inject_event(SensorType sensor_type, double offset, double duration_s) {
  schedule_event({sensor_type, offset, next_tick_s_.load(), duration_s});
}

double Node::active_offset(SensorType type, double t_s) const {
  std::lock_guard lock(events_mutex_);
  double total = 0.0;
  for (const auto& e : events_) {
    if (e.sensor_type == type && t_s >= e.start_s && t_s < e.start_s + e.duration_s) {
      total += e.offset;
    }
  }
  return total;
}

std::vector<SensorReading> Node::tick(double t_s, std::uint64_t timestamp_ms) {
  std::vector<SensorReading> out;
  out.reserve(config_.sensors.size());
  for (std::size_t i = 0; i < config_.sensors.size(); ++i) {
    const auto& model = config_.sensors[i];
    const double value = sample_sensor(model, t_s, rng_, active_offset(model.sensor_type, t_s));
    out.push_back({config_.node_id, model.sensor_type, next_seq_[i]++, timestamp_ms, value});
  }
  next_tick_s_ = t_s + 1.0 / config_.rate_hz;
  return out;
}

RunStats Node::run(Clock& clock, Emitter& emitter, std::stop_token stop, double duration_s) {
  RunStats stats;
  const auto start_ms = clock.now_ms();
  const double period_ms = 1000.0 / config_.rate_hz;
  for (std::uint64_t n = 0;; ++n) {
    const double t_s = static_cast<double>(n) / config_.rate_hz;
    if (duration_s > 0.0 && t_s >= duration_s) break;
    const auto deadline = start_ms + static_cast<std::uint64_t>(std::llround(n * period_ms));
    if (!clock.sleep_until_ms(deadline, stop)) break;
    ++stats.ticks;
    for (const auto& reading : tick(t_s, clock.now_ms())) {
      if (emitter.send(codec::encode(reading))) {
        ++stats.sent;
      } else {
        ++stats.failed;
        log::warn("node ", config_.node_id, ": send failed for ", to_string(reading.sensor_type),
                  " seq ", reading.seq);
      }
    }
  }
  return stats;
}

}  // namespace sensordash::sim
