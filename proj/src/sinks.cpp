#include "sensordash/sinks.hpp"

#include <chrono>
#include <ctime>

#include <httplib.h>

#include "sensordash/log.hpp"

namespace sensordash::alerts {
namespace {

std::uint64_t wall_ms() {
  using namespace std::chrono;
  return static_cast<std::uint64_t>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

std::string rfc822_date(std::uint64_t ms) {
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  ::gmtime_r(&secs, &tm);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%a, %d %b %Y %H:%M:%S +0000", &tm);
  return buf;
}

}  // namespace

FileSink::FileSink(std::filesystem::path path) : path_(std::move(path)) {}

std::string FileSink::name() const { return "file:" + path_.string(); }

void FileSink::deliver(const AlertMessage& message, const AlertEvent& event) {
  nlohmann::json line = to_json(message);
  line["timestamp_ms"] = event.timestamp_ms;
  line["event"] = to_json(event);
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path_.string());
  out << line.dump() << '\n';
  if (!out.flush()) throw std::runtime_error("write failed for " + path_.string());
}

WebhookSink::WebhookSink(std::string url, int timeout_ms)
    : url_(std::move(url)), timeout_ms_(timeout_ms) {
  constexpr std::string_view scheme = "http://";
  if (url_.rfind(scheme, 0) != 0) throw ValidationError("webhook url must start with http://");
  const auto slash = url_.find('/', scheme.size());
  origin_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

std::string WebhookSink::name() const { return "webhook:" + url_; }

void WebhookSink::deliver(const AlertMessage& message, const AlertEvent& event) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const nlohmann::json payload = {
      {"subject", message.subject}, {"body", message.body}, {"event", to_json(event)}};
  const auto res = client.Post(path_, payload.dump(), "application/json");
  if (!res) throw std::runtime_error("webhook unreachable: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw std::runtime_error("webhook returned HTTP " + std::to_string(res->status));
  }
}

MailFileSink::MailFileSink(std::filesystem::path path, std::string from)
    : path_(std::move(path)), from_(std::move(from)) {}

std::string MailFileSink::name() const { return "mail:" + path_.string(); }

std::string MailFileSink::render(const AlertMessage& message, const AlertEvent& event,
                                 const std::string& from) {
  std::string to;
  for (const auto& r : message.recipients) {
    if (!to.empty()) to += ", ";
    to += r;
  }
  std::string out;
  out += "From: " + from + "\r\n";
  out += "To: " + to + "\r\n";
  out += "Subject: " + message.subject + "\r\n";
  out += "Date: " + rfc822_date(event.timestamp_ms) + "\r\n";
  out += "Message-ID: <" + event.event_id + "@sensordash>\r\n";
  out += "Content-Type: text/plain; charset=utf-8\r\n";
  out += "\r\n";
  std::size_t start = 0;
  while (start < message.body.size()) {
    auto nl = message.body.find('\n', start);
    if (nl == std::string::npos) nl = message.body.size();
    auto line = message.body.substr(start, nl - start);
    // mbox readers treat a body line starting with "From " as a new message.
    if (line.rfind("From ", 0) == 0) line.insert(0, ">");
    out += line + "\r\n";
    start = nl + 1;
  }
  return out;
}

void MailFileSink::deliver(const AlertMessage& message, const AlertEvent& event) {
  const auto text = render(message, event, from_);
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path_.string());
  out << "From sensordash " << rfc822_date(event.timestamp_ms) << "\r\n" << text << "\r\n";
  if (!out.flush()) throw std::runtime_error("write failed for " + path_.string());
}

std::vector<DeliveryResult> dispatch(const AlertMessage& message, const AlertEvent& event,
                                     std::span<const std::shared_ptr<AlertSink>> sinks) {
  if (sinks.empty()) throw ConfigurationError("no alert sinks configured");
  std::vector<DeliveryResult> results;
  results.reserve(sinks.size());
  for (const auto& sink : sinks) {
    DeliveryResult r{sink->name(), false, {}};
    try {
      sink->deliver(message, event);
      r.ok = true;
    } catch (const std::exception& e) {
      r.detail = e.what();
    } catch (...) {
      r.detail = "unknown error";
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::shared_ptr<AlertSink> sink_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "file") return std::make_shared<FileSink>(j.at("path").get<std::string>());
    if (type == "webhook") {
      return std::make_shared<WebhookSink>(j.at("url").get<std::string>(),
                                           j.value("timeout_ms", 1000));
    }
    if (type == "mail") {
      return std::make_shared<MailFileSink>(j.at("path").get<std::string>(),
                                            j.value("from", std::string("sensordash@localhost")));
    }
    throw ConfigurationError("unknown sink type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad sink config: ") + e.what());
  }
}

nlohmann::json to_json(const AlertLogRecord& record) {
  auto results = nlohmann::json::array();
  for (const auto& r : record.results) {
    results.push_back({{"sink", r.sink}, {"ok", r.ok}, {"detail", r.detail}});
  }
  return {{"event", to_json(record.event)},
          {"subject", record.message.subject},
          {"body", record.message.body},
          {"results", results},
          {"logged_at_ms", record.logged_at_ms}};
}

AlertLog::AlertLog(std::optional<std::filesystem::path> path, std::size_t keep_recent)
    : path_(std::move(path)), keep_(keep_recent) {
  if (path_) {
    out_.open(*path_, std::ios::app);
    if (!out_) throw ConfigurationError("cannot open alert log " + path_->string());
  }
}

void AlertLog::append(AlertLogRecord record) {
  if (record.logged_at_ms == 0) record.logged_at_ms = wall_ms();
  std::lock_guard lock(mutex_);
  if (out_.is_open()) {
    out_ << to_json(record).dump() << '\n';
    out_.flush();
  }
  recent_.push_back(std::move(record));
  while (recent_.size() > keep_) recent_.pop_front();
  ++total_;
}

std::vector<AlertLogRecord> AlertLog::recent(std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::vector<AlertLogRecord> out;
  for (auto it = recent_.rbegin(); it != recent_.rend() && out.size() < limit; ++it) {
    out.push_back(*it);
  }
  return out;
}

std::size_t AlertLog::total() const {
  std::lock_guard lock(mutex_);
  return total_;
}

Dispatcher::Dispatcher(SinkList sinks, AlertLog& log, Completion on_complete)
    : sinks_(std::move(sinks)), log_(log), on_complete_(std::move(on_complete)) {
  if (sinks_.empty()) throw ConfigurationError("no alert sinks configured");
  worker_ = std::thread([this] { worker_loop(); });
}

Dispatcher::~Dispatcher() { shutdown(); }

void Dispatcher::submit(AlertEvent event, AlertMessage message) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) {
      log::warn("dispatcher stopped; dropping alert ", event.event_id);
      return;
    }
    queue_.emplace_back(std::move(event), std::move(message));
  }
  cv_.notify_one();
}

void Dispatcher::drain() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void Dispatcher::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && !worker_.joinable()) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void Dispatcher::worker_loop() {
  while (true) {
    std::pair<AlertEvent, AlertMessage> item;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) {
        idle_cv_.notify_all();
        return;
      }
      item = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    AlertLogRecord record{item.first, item.second, {}, 0};
    try {
      record.results = dispatch(item.second, item.first, sinks_);
    } catch (const std::exception& e) {
      log::error("alert ", record.event.event_id, " not dispatched: ", e.what());
    }
    record.logged_at_ms = wall_ms();
    for (const auto& r : record.results) {
      if (!r.ok) log::warn("alert ", record.event.event_id, " to ", r.sink, " failed: ", r.detail);
    }
    log_.append(record);
    if (on_complete_) on_complete_(record);
    {
      std::lock_guard lock(mutex_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace sensordash::alerts
