#include "sensordash/persistence.hpp"

#include <cmath>

namespace sensordash {

nlohmann::json to_json(const SensorReading& reading) {
  return {{"node_id", reading.node_id},
          {"sensor_type", to_string(reading.sensor_type)},
          {"seq", reading.seq},
          {"timestamp_ms", reading.timestamp_ms},
          {"value", reading.value}};
}

SensorReading reading_from_json(const nlohmann::json& j) {
  try {
    SensorReading r;
    r.node_id = j.at("node_id").get<std::string>();
    if (!is_valid_identifier(r.node_id)) throw ValidationError("invalid node_id");
    const auto type = parse_sensor_type(j.at("sensor_type").get<std::string>());
    if (!type) throw ValidationError("unknown sensor_type");
    r.sensor_type = *type;
    r.seq = j.at("seq").get<std::uint32_t>();
    r.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
    r.value = j.at("value").get<double>();
    if (!std::isfinite(r.value)) throw ValidationError("non-finite value");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad reading object: ") + e.what());
  }
}

ReadingLog::ReadingLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open reading log " + path.string());
}

void ReadingLog::append(const SensorReading& reading) {
  const auto line = to_json(reading).dump();
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

ReplayResult load_reading_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ReplayResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.readings.push_back(reading_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception&) {
      ++result.skipped_lines;
    }
  }
  return result;
}

}  // namespace sensordash
