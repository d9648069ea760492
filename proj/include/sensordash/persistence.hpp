#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensordash/sensor_types.hpp"

namespace sensordash {

[[nodiscard]] nlohmann::json to_json(const SensorReading& reading);
/// Throws ValidationError on missing fields, unknown types or non-finite values.
[[nodiscard]] SensorReading reading_from_json(const nlohmann::json& j);

/// Append-only JSONL log of stored readings, one object per line.
class ReadingLog {
public:
  explicit ReadingLog(const std::filesystem::path& path);

  void append(const SensorReading& reading);

private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct ReplayResult {
  std::vector<SensorReading> readings;
  std::size_t skipped_lines = 0;
};

/// Reads a JSONL reading log. Blank lines are ignored; unparsable lines are counted.
[[nodiscard]] ReplayResult load_reading_log(const std::filesystem::path& path);

}  // namespace sensordash
