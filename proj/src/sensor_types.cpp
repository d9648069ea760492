#include "sensordash/sensor_types.hpp"

#include <functional>

namespace sensordash {

std::string_view to_string(SensorType type) noexcept {
  switch (type) {
    case SensorType::light: return "light";
    case SensorType::temperature: return "temperature";
    case SensorType::humidity: return "humidity";
    case SensorType::smoke: return "smoke";
    case SensorType::flood: return "flood";
  }
  return "unknown";
}

std::optional<SensorType> parse_sensor_type(std::string_view name) noexcept {
  for (auto type : kAllSensorTypes) {
    if (to_string(type) == name) return type;
  }
  return std::nullopt;
}

std::string_view unit_of(SensorType type) noexcept {
  switch (type) {
    case SensorType::light: return "lux";
    case SensorType::temperature: return "C";
    case SensorType::humidity: return "%RH";
    case SensorType::smoke: return "ppm";
    case SensorType::flood: return "level";
  }
  return "";
}

bool is_valid_identifier(std::string_view id) noexcept {
  if (id.empty() || id.size() > 32) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string to_string(const SensorKey& key) {
  std::string out = key.node_id;
  out += '/';
  out += to_string(key.sensor_type);
  return out;
}

std::size_t SensorKeyHash::operator()(const SensorKey& key) const noexcept {
  const auto h = std::hash<std::string>{}(key.node_id);
  return h ^ (static_cast<std::size_t>(key.sensor_type) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace sensordash
