#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sensordash/sensor_types.hpp"

namespace sensordash {
class TelemetryStore;
}

namespace sensordash::alerts {

class EmptySelectionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Comparator { above, below };

[[nodiscard]] std::string_view to_string(Comparator c) noexcept;

/// Which sensors a rule (or a manual alert) applies to.
class Selection {
public:
  enum class Kind { one, all, subset };

  static Selection one(SensorKey key);
  static Selection all();
  /// Throws ValidationError on an empty or duplicate-containing list.
  static Selection subset(std::vector<SensorKey> keys);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<SensorKey>& keys() const noexcept { return keys_; }
  [[nodiscard]] bool covers(const SensorKey& key) const;

  friend bool operator==(const Selection&, const Selection&) = default;

private:
  Selection(Kind kind, std::vector<SensorKey> keys) : kind_(kind), keys_(std::move(keys)) {}

  Kind kind_ = Kind::all;
  std::vector<SensorKey> keys_;
};

struct AlertRule {
  std::string rule_id;
  Selection selection = Selection::all();
  Comparator comparator = Comparator::above;
  double threshold = 0.0;
  bool enabled = true;

  void validate() const;
  /// Strict comparison; a value equal to the threshold never fires.
  [[nodiscard]] bool breached_by(double value) const noexcept {
    return comparator == Comparator::above ? value > threshold : value < threshold;
  }
};

enum class AlertKind { automatic, manual };

struct AlertEvent {
  std::string event_id;
  /// "manual" for manual alerts.
  std::string rule_id;
  SensorKey key;
  double triggering_value = 0.0;
  std::optional<double> threshold;
  std::optional<Comparator> comparator;
  std::uint64_t timestamp_ms = 0;
  AlertKind kind = AlertKind::automatic;
};

struct AlertMessage {
  std::string subject;
  std::string body;
  std::vector<std::string> recipients;
};

/// Latch per (rule, sensor) plus the event id counter.
class ArmedState {
public:
  [[nodiscard]] bool latched(const std::string& rule_id, const SensorKey& key) const;
  void set_latched(const std::string& rule_id, const SensorKey& key, bool value);
  void reset_rule(const std::string& rule_id);
  [[nodiscard]] std::string next_event_id();

private:
  std::set<std::pair<std::string, SensorKey>> latched_;
  std::uint64_t next_id_ = 1;
};

/// Edge-triggered evaluation of `reading` against every enabled rule. A rule
/// fires when its comparator turns true for a (rule, sensor) pair and re-arms
/// once it turns false again.
[[nodiscard]] std::vector<AlertEvent> evaluate(std::span<const AlertRule> rules,
                                               const SensorReading& reading, ArmedState& armed);

/// `snapshot` is the latest reading of every sensor on the event's node.
[[nodiscard]] AlertMessage format_alert(const AlertEvent& event,
                                        std::span<const SensorReading> snapshot,
                                        std::vector<std::string> recipients = {});

/// Thread-safe rule table with its armed state. Updates are atomic with
/// respect to evaluation.
class RuleSet {
public:
  /// Assigns `rule-<n>` when the id is empty. Replacing a rule clears its latches.
  std::string upsert(AlertRule rule);
  bool remove(const std::string& rule_id);
  [[nodiscard]] std::vector<AlertRule> list() const;
  [[nodiscard]] std::optional<AlertRule> get(const std::string& rule_id) const;
  [[nodiscard]] std::size_t size() const;

  [[nodiscard]] std::vector<AlertEvent> evaluate(const SensorReading& reading);
  [[nodiscard]] std::string next_event_id();

private:
  mutable std::mutex mutex_;
  std::map<std::string, AlertRule> rules_;
  ArmedState armed_;
  std::uint64_t next_rule_ = 1;
};

/// One Manual event per selected known sensor, carrying its latest value.
/// Throws EmptySelectionError if nothing in the store matches.
[[nodiscard]] std::vector<AlertEvent> manual_alert(const Selection& selection,
                                                   const TelemetryStore& store, RuleSet& ids,
                                                   std::uint64_t now_ms);

[[nodiscard]] nlohmann::json to_json(const SensorKey& key);
[[nodiscard]] SensorKey key_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const Selection& selection);
[[nodiscard]] Selection selection_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const AlertRule& rule);
[[nodiscard]] AlertRule rule_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const AlertEvent& event);
[[nodiscard]] nlohmann::json to_json(const AlertMessage& message);

}  // namespace sensordash::alerts
