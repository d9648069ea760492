#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sensordash {

enum class SensorType { light, temperature, humidity, smoke, flood };

inline constexpr std::array<SensorType, 5> kAllSensorTypes = {
    SensorType::light, SensorType::temperature, SensorType::humidity, SensorType::smoke,
    SensorType::flood};

[[nodiscard]] std::string_view to_string(SensorType type) noexcept;
[[nodiscard]] std::optional<SensorType> parse_sensor_type(std::string_view name) noexcept;

/// Native unit label used in alert bodies and UI payloads.
[[nodiscard]] std::string_view unit_of(SensorType type) noexcept;

/// Node identifiers match `[A-Za-z0-9_-]{1,32}`.
[[nodiscard]] bool is_valid_identifier(std::string_view id) noexcept;

class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct SensorKey {
  std::string node_id;
  SensorType sensor_type = SensorType::light;

  friend auto operator<=>(const SensorKey&, const SensorKey&) = default;
  friend bool operator==(const SensorKey&, const SensorKey&) = default;
};

/// Lexicographic `node_id/sensor_type`, used in logs and map keys.
[[nodiscard]] std::string to_string(const SensorKey& key);

struct SensorKeyHash {
  std::size_t operator()(const SensorKey& key) const noexcept;
};

struct SensorReading {
  std::string node_id;
  SensorType sensor_type = SensorType::light;
  std::uint32_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  double value = 0.0;

  [[nodiscard]] SensorKey key() const { return {node_id, sensor_type}; }

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

}  // namespace sensordash
