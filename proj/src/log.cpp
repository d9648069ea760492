#include "sensordash/log.hpp"

#include <atomic>

namespace sensordash::log {
namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

constexpr std::string_view tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "?";
}
}  // namespace

void set_level(Level level) noexcept { g_level = level; }
Level level() noexcept { return g_level; }

void write(Level level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::clog << '[' << tag(level) << "] " << message << '\n';
}

}  // namespace sensordash::log
