#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sensordash/alerts.hpp"

namespace sensordash::alerts {

struct DeliveryResult {
  std::string sink;
  bool ok = false;
  std::string detail;
};

class AlertSink {
public:
  virtual ~AlertSink() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  /// Throws on delivery failure.
  virtual void deliver(const AlertMessage& message, const AlertEvent& event) = 0;
};

/// Appends `{subject, body, recipients, timestamp_ms, event}` lines.
class FileSink final : public AlertSink {
public:
  explicit FileSink(std::filesystem::path path);
  [[nodiscard]] std::string name() const override;
  void deliver(const AlertMessage& message, const AlertEvent& event) override;

private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// HTTP POST of `{subject, body, event}` to an http:// URL.
class WebhookSink final : public AlertSink {
public:
  explicit WebhookSink(std::string url, int timeout_ms = 1000);
  [[nodiscard]] std::string name() const override;
  void deliver(const AlertMessage& message, const AlertEvent& event) override;

private:
  std::string url_;
  std::string origin_;
  std::string path_;
  int timeout_ms_;
};

/// Writes RFC 822 style messages to an mbox file instead of talking SMTP.
class MailFileSink final : public AlertSink {
public:
  MailFileSink(std::filesystem::path path, std::string from);
  [[nodiscard]] std::string name() const override;
  void deliver(const AlertMessage& message, const AlertEvent& event) override;

  [[nodiscard]] static std::string render(const AlertMessage& message, const AlertEvent& event,
                                          const std::string& from);

private:
  std::filesystem::path path_;
  std::string from_;
  std::mutex mutex_;
};

class CallbackSink final : public AlertSink {
public:
  using Callback = std::function<void(const AlertMessage&, const AlertEvent&)>;
  CallbackSink(std::string name, Callback cb) : name_(std::move(name)), cb_(std::move(cb)) {}
  [[nodiscard]] std::string name() const override { return name_; }
  void deliver(const AlertMessage& message, const AlertEvent& event) override { cb_(message, event); }

private:
  std::string name_;
  Callback cb_;
};

using SinkList = std::vector<std::shared_ptr<AlertSink>>;

/// Delivers to every sink independently. A failing sink is reported in its
/// result and never stops delivery to the others. Throws ConfigurationError
/// only when `sinks` is empty.
[[nodiscard]] std::vector<DeliveryResult> dispatch(const AlertMessage& message,
                                                   const AlertEvent& event,
                                                   std::span<const std::shared_ptr<AlertSink>> sinks);

/// Builds a sink from `{"type": "file"|"webhook"|"mail", ...}`.
[[nodiscard]] std::shared_ptr<AlertSink> sink_from_json(const nlohmann::json& j);

struct AlertLogRecord {
  AlertEvent event;
  AlertMessage message;
  std::vector<DeliveryResult> results;
  std::uint64_t logged_at_ms = 0;
};

[[nodiscard]] nlohmann::json to_json(const AlertLogRecord& record);

/// JSONL alert log plus an in-memory window of recent records.
class AlertLog {
public:
  explicit AlertLog(std::optional<std::filesystem::path> path = std::nullopt,
                    std::size_t keep_recent = 1000);

  void append(AlertLogRecord record);
  /// Most recent first.
  [[nodiscard]] std::vector<AlertLogRecord> recent(std::size_t limit) const;
  [[nodiscard]] std::size_t total() const;

private:
  std::optional<std::filesystem::path> path_;
  std::size_t keep_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::deque<AlertLogRecord> recent_;
  std::size_t total_ = 0;
};

/// Background delivery queue so slow sinks never block ingestion.
class Dispatcher {
public:
  using Completion = std::function<void(const AlertLogRecord&)>;

  /// Throws ConfigurationError when `sinks` is empty.
  Dispatcher(SinkList sinks, AlertLog& log, Completion on_complete = {});
  ~Dispatcher();
  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  void submit(AlertEvent event, AlertMessage message);
  /// Delivers everything queued, then stops the worker. Idempotent.
  void shutdown();
  /// Blocks until the queue is empty and no delivery is in flight.
  void drain();

private:
  void worker_loop();

  SinkList sinks_;
  AlertLog& log_;
  Completion on_complete_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::pair<AlertEvent, AlertMessage>> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace sensordash::alerts
