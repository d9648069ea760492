#include "sensordash/alerts.hpp"

#include <algorithm>
#include <cmath>

#include "sensordash/codec.hpp"
#include "sensordash/store.hpp"

namespace sensordash::alerts {

std::string_view to_string(Comparator c) noexcept {
  return c == Comparator::above ? "above" : "below";
}

Selection Selection::one(SensorKey key) { return Selection(Kind::one, {std::move(key)}); }

Selection Selection::all() { return Selection(Kind::all, {}); }

Selection Selection::subset(std::vector<SensorKey> keys) {
  if (keys.empty()) throw ValidationError("subset selection must not be empty");
  auto sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("subset selection contains duplicates");
  }
  return Selection(Kind::subset, std::move(keys));
}

bool Selection::covers(const SensorKey& key) const {
  if (kind_ == Kind::all) return true;
  return std::find(keys_.begin(), keys_.end(), key) != keys_.end();
}

void AlertRule::validate() const {
  if (!rule_id.empty() && !is_valid_identifier(rule_id)) {
    throw ValidationError("invalid rule_id '" + rule_id + "'");
  }
  if (!std::isfinite(threshold)) throw ValidationError("threshold must be finite");
  for (const auto& key : selection.keys()) {
    if (!is_valid_identifier(key.node_id)) throw ValidationError("invalid node id in selection");
  }
}

bool ArmedState::latched(const std::string& rule_id, const SensorKey& key) const {
  return latched_.contains({rule_id, key});
}

void ArmedState::set_latched(const std::string& rule_id, const SensorKey& key, bool value) {
  if (value) {
    latched_.insert({rule_id, key});
  } else {
    latched_.erase({rule_id, key});
  }
}

void ArmedState::reset_rule(const std::string& rule_id) {
  std::erase_if(latched_, [&](const auto& entry) { return entry.first == rule_id; });
}

std::string ArmedState::next_event_id() { return "evt-" + std::to_string(next_id_++); }

std::vector<AlertEvent> evaluate(std::span<const AlertRule> rules, const SensorReading& reading,
                                 ArmedState& armed) {
  std::vector<AlertEvent> events;
  const auto key = reading.key();
  for (const auto& rule : rules) {
    if (!rule.enabled || !rule.selection.covers(key)) continue;
    const bool breached = rule.breached_by(reading.value);
    const bool latched = armed.latched(rule.rule_id, key);
    if (breached && !latched) {
      events.push_back({armed.next_event_id(), rule.rule_id, key, reading.value, rule.threshold,
                        rule.comparator, reading.timestamp_ms, AlertKind::automatic});
    }
    if (breached != latched) armed.set_latched(rule.rule_id, key, breached);
  }
  return events;
}

AlertMessage format_alert(const AlertEvent& event, std::span<const SensorReading> snapshot,
                          std::vector<std::string> recipients) {
  if (snapshot.empty()) throw ValidationError("node snapshot must not be empty");
  const auto type = std::string(sensordash::to_string(event.key.sensor_type));
  const auto unit = std::string(unit_of(event.key.sensor_type));

  AlertMessage msg;
  msg.recipients = std::move(recipients);
  if (event.kind == AlertKind::manual) {
    msg.subject = "MANUAL ALERT: " + type + " on " + event.key.node_id;
  } else {
    msg.subject = "ALERT: " + type + " threshold crossed on " + event.key.node_id;
  }

  for (const auto& r : snapshot) {
    msg.body += std::string(sensordash::to_string(r.sensor_type)) + ": " +
                codec::format_value(r.value) + " " + std::string(unit_of(r.sensor_type)) + "\n";
  }
  msg.body += "Trigger: " + type + " = " + codec::format_value(event.triggering_value) + " " + unit;
  if (event.threshold && event.comparator) {
    msg.body += " (" + std::string(to_string(*event.comparator)) + " threshold " +
                codec::format_value(*event.threshold) + " " + unit + ", rule " + event.rule_id + ")";
  } else {
    msg.body += " (manual)";
  }
  msg.body += "\n";
  return msg;
}

std::string RuleSet::upsert(AlertRule rule) {
  rule.validate();
  std::lock_guard lock(mutex_);
  if (rule.rule_id.empty()) {
    do {
      rule.rule_id = "rule-" + std::to_string(next_rule_++);
    } while (rules_.contains(rule.rule_id));
  }
  armed_.reset_rule(rule.rule_id);
  auto id = rule.rule_id;
  rules_.insert_or_assign(id, std::move(rule));
  return id;
}

bool RuleSet::remove(const std::string& rule_id) {
  std::lock_guard lock(mutex_);
  armed_.reset_rule(rule_id);
  return rules_.erase(rule_id) > 0;
}

std::vector<AlertRule> RuleSet::list() const {
  std::lock_guard lock(mutex_);
  std::vector<AlertRule> out;
  for (const auto& [_, rule] : rules_) out.push_back(rule);
  return out;
}

std::optional<AlertRule> RuleSet::get(const std::string& rule_id) const {
  std::lock_guard lock(mutex_);
  const auto it = rules_.find(rule_id);
  if (it == rules_.end()) return std::nullopt;
  return it->second;
}

std::size_t RuleSet::size() const {
  std::lock_guard lock(mutex_);
  return rules_.size();
}

std::vector<AlertEvent> RuleSet::evaluate(const SensorReading& reading) {
  std::lock_guard lock(mutex_);
  std::vector<AlertRule> rules;
  rules.reserve(rules_.size());
  for (const auto& [_, rule] : rules_) rules.push_back(rule);
  return alerts::evaluate(rules, reading, armed_);
}

std::string RuleSet::next_event_id() {
  std::lock_guard lock(mutex_);
  return armed_.next_event_id();
}

std::vector<AlertEvent> manual_alert(const Selection& selection, const TelemetryStore& store,
                                     RuleSet& ids, std::uint64_t now_ms) {
  std::vector<SensorReading> targets;
  if (selection.kind() == Selection::Kind::all) {
    targets = store.latest_all();
  } else {
    for (const auto& key : selection.keys()) {
      if (auto r = store.latest(key)) targets.push_back(std::move(*r));
    }
  }
  if (targets.empty()) throw EmptySelectionError("selection matches no known sensor");

  std::vector<AlertEvent> events;
  for (const auto& r : targets) {
    events.push_back({ids.next_event_id(), "manual", r.key(), r.value, std::nullopt, std::nullopt,
                      now_ms, AlertKind::manual});
  }
  return events;
}

nlohmann::json to_json(const SensorKey& key) {
  return {{"node_id", key.node_id}, {"sensor_type", sensordash::to_string(key.sensor_type)}};
}

SensorKey key_from_json(const nlohmann::json& j) {
  SensorKey key;
  key.node_id = j.at("node_id").get<std::string>();
  if (!is_valid_identifier(key.node_id)) throw ValidationError("invalid node_id");
  const auto name = j.at("sensor_type").get<std::string>();
  const auto type = parse_sensor_type(name);
  if (!type) throw ValidationError("unknown sensor_type '" + name + "'");
  key.sensor_type = *type;
  return key;
}

nlohmann::json to_json(const Selection& selection) {
  switch (selection.kind()) {
    case Selection::Kind::one:
      return {{"kind", "one"}, {"key", to_json(selection.keys().front())}};
    case Selection::Kind::all:
      return {{"kind", "all"}};
    case Selection::Kind::subset: {
      auto keys = nlohmann::json::array();
      for (const auto& k : selection.keys()) keys.push_back(to_json(k));
      return {{"kind", "subset"}, {"keys", keys}};
    }
  }
  return {};
}

Selection selection_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "all") return Selection::all();
    if (kind == "one") return Selection::one(key_from_json(j.at("key")));
    if (kind == "subset") {
      std::vector<SensorKey> keys;
      for (const auto& k : j.at("keys")) keys.push_back(key_from_json(k));
      return Selection::subset(std::move(keys));
    }
    throw ValidationError("unknown selection kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad selection: ") + e.what());
  }
}

nlohmann::json to_json(const AlertRule& rule) {
  return {{"rule_id", rule.rule_id},
          {"selection", to_json(rule.selection)},
          {"comparator", to_string(rule.comparator)},
          {"threshold", rule.threshold},
          {"enabled", rule.enabled}};
}

AlertRule rule_from_json(const nlohmann::json& j) {
  try {
    AlertRule rule;
    rule.rule_id = j.value("rule_id", std::string{});
    rule.selection = selection_from_json(j.at("selection"));
    const auto cmp = j.at("comparator").get<std::string>();
    if (cmp == "above") {
      rule.comparator = Comparator::above;
    } else if (cmp == "below") {
      rule.comparator = Comparator::below;
    } else {
      throw ValidationError("comparator must be 'above' or 'below'");
    }
    rule.threshold = j.at("threshold").get<double>();
    rule.enabled = j.value("enabled", true);
    rule.validate();
    return rule;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad rule: ") + e.what());
  }
}

nlohmann::json to_json(const AlertEvent& event) {
  nlohmann::json j = {{"event_id", event.event_id},
                      {"rule_id", event.rule_id},
                      {"key", to_json(event.key)},
                      {"triggering_value", event.triggering_value},
                      {"timestamp_ms", event.timestamp_ms},
                      {"kind", event.kind == AlertKind::manual ? "manual" : "automatic"}};
  j["threshold"] = event.threshold ? nlohmann::json(*event.threshold) : nlohmann::json(nullptr);
  j["comparator"] =
      event.comparator ? nlohmann::json(to_string(*event.comparator)) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const AlertMessage& message) {
  return {{"subject", message.subject},
          {"body", message.body},
          {"recipients", message.recipients}};
}

}  // namespace sensordash::alerts
