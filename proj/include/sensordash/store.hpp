#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sensordash/sensor_types.hpp"

namespace sensordash {

/// 24 h of history at 1 Hz.
inline constexpr std::size_t kDefaultSeriesCapacity = 86'400;

enum class IngestOutcome {
  stored,
  duplicate,
  /// Older than the oldest retained sample; dropped.
  stale,
};

class KeyError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

class EmptyWindowError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TimeRange {
  std::uint64_t from_ms = 0;
  std::uint64_t to_ms = std::numeric_limits<std::uint64_t>::max();

  [[nodiscard]] bool contains(std::uint64_t t) const noexcept { return t >= from_ms && t <= to_ms; }
};

struct SeriesPoint {
  std::uint64_t timestamp_ms = 0;
  double value = 0.0;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct SeriesSummary {
  double low = 0.0;
  double high = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
  double latest = 0.0;
};

/// Summary over timestamp-ascending points. Throws EmptyWindowError on an empty span.
[[nodiscard]] SeriesSummary summarize_points(std::span<const SeriesPoint> points);

/// Splits [first, last] timestamp span into `max_points` equal-width buckets
/// and emits one (mean timestamp, mean value) point per non-empty bucket.
/// Input at or below `max_points` is returned unchanged.
[[nodiscard]] std::vector<SeriesPoint> downsample_bucket_mean(std::span<const SeriesPoint> points,
                                                              std::size_t max_points);

/// Per-sensor ring buffers of readings, ordered by timestamp.
///
/// Safe for concurrent use: one writer (the ingest path) and any number of
/// readers. Observers run synchronously on the ingest thread after the
/// reading is visible to readers.
class TelemetryStore {
public:
  using Observer = std::function<void(const SensorReading&)>;

  explicit TelemetryStore(std::size_t capacity_per_series = kDefaultSeriesCapacity);

  IngestOutcome ingest(const SensorReading& reading);

  void subscribe(Observer observer);

  [[nodiscard]] std::vector<SeriesPoint> query_series(const SensorKey& key, TimeRange range,
                                                      std::size_t max_points) const;
  [[nodiscard]] SeriesSummary summarize(const SensorKey& key, TimeRange range) const;

  [[nodiscard]] std::vector<SensorKey> keys() const;
  [[nodiscard]] bool contains(const SensorKey& key) const;
  [[nodiscard]] std::size_t series_size(const SensorKey& key) const;
  [[nodiscard]] std::optional<SensorReading> latest(const SensorKey& key) const;
  /// Latest reading for every known sensor, sorted by key.
  [[nodiscard]] std::vector<SensorReading> latest_all() const;
  /// Latest reading for every sensor on `node_id`, sorted by sensor type.
  [[nodiscard]] std::vector<SensorReading> node_snapshot(const std::string& node_id) const;

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }

private:
  struct Sample {
    std::uint64_t timestamp_ms;
    double value;
    std::uint32_t seq;
  };
  struct Series {
    std::deque<Sample> samples;
    std::unordered_set<std::uint32_t> seqs;
  };

  const Series& series_or_throw(const SensorKey& key) const;
  static SensorReading to_reading(const SensorKey& key, const Sample& s);

  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::map<SensorKey, Series> series_;

  std::mutex observers_mutex_;
  std::vector<Observer> observers_;
};

}  // namespace sensordash
