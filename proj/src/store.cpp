#include "sensordash/store.hpp"

#include <algorithm>
#include <cmath>

namespace sensordash {

SeriesSummary summarize_points(std::span<const SeriesPoint> points) {
  if (points.empty()) throw EmptyWindowError("no samples in window");
  SeriesSummary out;
  out.low = points.front().value;
  out.high = points.front().value;
  double sum = 0.0;
  for (const auto& p : points) {
    out.low = std::min(out.low, p.value);
    out.high = std::max(out.high, p.value);
    sum += p.value;
  }
  out.count = points.size();
  // Rounding in the sum can push the mean a ulp outside [low, high].
  out.mean = std::clamp(sum / static_cast<double>(points.size()), out.low, out.high);
  out.latest = points.back().value;
  return out;
}

std::vector<SeriesPoint> downsample_bucket_mean(std::span<const SeriesPoint> points,
                                                std::size_t max_points) {
  if (max_points < 2) throw ValidationError("max_points must be at least 2");
  if (points.size() <= max_points) return {points.begin(), points.end()};

  const auto first = points.front().timestamp_ms;
  const auto width = static_cast<unsigned __int128>(points.back().timestamp_ms - first) + 1;

  struct Acc {
    long double ts = 0;
    double value = 0;
    std::size_t n = 0;
  };
  std::vector<Acc> buckets(max_points);
  for (const auto& p : points) {
    const auto offset = static_cast<unsigned __int128>(p.timestamp_ms - first);
    const auto idx = static_cast<std::size_t>(offset * max_points / width);
    auto& b = buckets[idx];
    b.ts += static_cast<long double>(p.timestamp_ms);
    b.value += p.value;
    ++b.n;
  }

  std::vector<SeriesPoint> out;
  out.reserve(max_points);
  for (const auto& b : buckets) {
    if (b.n == 0) continue;
    const auto n = static_cast<long double>(b.n);
    out.push_back({static_cast<std::uint64_t>(std::llround(b.ts / n)),
                   b.value / static_cast<double>(b.n)});
  }
  return out;
}

TelemetryStore::TelemetryStore(std::size_t capacity_per_series) : capacity_(capacity_per_series) {
  if (capacity_ == 0) throw ValidationError("series capacity must be positive");
}

IngestOutcome TelemetryStore::ingest(const SensorReading& reading) {
  {
    std::unique_lock lock(mutex_);
    auto& series = series_[reading.key()];
    if (series.seqs.contains(reading.seq)) return IngestOutcome::duplicate;
    auto& samples = series.samples;
    if (!samples.empty() && reading.timestamp_ms < samples.front().timestamp_ms) {
      return IngestOutcome::stale;
    }
    const Sample sample{reading.timestamp_ms, reading.value, reading.seq};
    if (samples.empty() || samples.back().timestamp_ms <= reading.timestamp_ms) {
      samples.push_back(sample);
    } else {
      auto pos = std::upper_bound(
          samples.begin(), samples.end(), reading.timestamp_ms,
          [](std::uint64_t t, const Sample& s) { return t < s.timestamp_ms; });
      samples.insert(pos, sample);
    }
    series.seqs.insert(reading.seq);
    while (samples.size() > capacity_) {
      series.seqs.erase(samples.front().seq);
      samples.pop_front();
    }
  }

  std::vector<Observer> observers;
  {
    std::lock_guard lock(observers_mutex_);
    observers = observers_;
  }
  for (const auto& observer : observers) observer(reading);
  return IngestOutcome::stored;
}

void TelemetryStore::subscribe(Observer observer) {
  std::lock_guard lock(observers_mutex_);
  observers_.push_back(std::move(observer));
}

const TelemetryStore::Series& TelemetryStore::series_or_throw(const SensorKey& key) const {
  const auto it = series_.find(key);
  if (it == series_.end()) throw KeyError("unknown sensor " + to_string(key));
  return it->second;
}

SensorReading TelemetryStore::to_reading(const SensorKey& key, const Sample& s) {
  return {key.node_id, key.sensor_type, s.seq, s.timestamp_ms, s.value};
}

std::vector<SeriesPoint> TelemetryStore::query_series(const SensorKey& key, TimeRange range,
                                                      std::size_t max_points) const {
  if (range.from_ms > range.to_ms) throw ValidationError("range start after range end");
  if (max_points < 2) throw ValidationError("max_points must be at least 2");
  std::vector<SeriesPoint> points;
  {
    std::shared_lock lock(mutex_);
    const auto& samples = series_or_throw(key).samples;
    auto lo = std::lower_bound(samples.begin(), samples.end(), range.from_ms,
                               [](const Sample& s, std::uint64_t t) { return s.timestamp_ms < t; });
    for (auto it = lo; it != samples.end() && it->timestamp_ms <= range.to_ms; ++it) {
      points.push_back({it->timestamp_ms, it->value});
    }
  }
  return downsample_bucket_mean(points, max_points);
}

SeriesSummary TelemetryStore::summarize(const SensorKey& key, TimeRange range) const {
  if (range.from_ms > range.to_ms) throw ValidationError("range start after range end");
  std::vector<SeriesPoint> points;
  {
    std::shared_lock lock(mutex_);
    for (const auto& s : series_or_throw(key).samples) {
      if (range.contains(s.timestamp_ms)) points.push_back({s.timestamp_ms, s.value});
    }
  }
  return summarize_points(points);
}

std::vector<SensorKey> TelemetryStore::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<SensorKey> out;
  out.reserve(series_.size());
  for (const auto& [key, _] : series_) out.push_back(key);
  return out;
}

bool TelemetryStore::contains(const SensorKey& key) const {
  std::shared_lock lock(mutex_);
  return series_.contains(key);
}

std::size_t TelemetryStore::series_size(const SensorKey& key) const {
  std::shared_lock lock(mutex_);
  return series_or_throw(key).samples.size();
}

std::optional<SensorReading> TelemetryStore::latest(const SensorKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = series_.find(key);
  if (it == series_.end() || it->second.samples.empty()) return std::nullopt;
  return to_reading(key, it->second.samples.back());
}

std::vector<SensorReading> TelemetryStore::latest_all() const {
  std::shared_lock lock(mutex_);
  std::vector<SensorReading> out;
  for (const auto& [key, series] : series_) {
    if (!series.samples.empty()) out.push_back(to_reading(key, series.samples.back()));
  }
  return out;
}

std::vector<SensorReading> TelemetryStore::node_snapshot(const std::string& node_id) const {
  std::shared_lock lock(mutex_);
  std::vector<SensorReading> out;
  for (auto it = series_.lower_bound(SensorKey{node_id, kAllSensorTypes.front()});
       it != series_.end() && it->first.node_id == node_id; ++it) {
    if (!it->second.samples.empty()) out.push_back(to_reading(it->first, it->second.samples.back()));
  }
  return out;
}

}  // namespace sensordash
