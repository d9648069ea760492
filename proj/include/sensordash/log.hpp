#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace sensordash::log {

enum class Level { debug, info, warn, error };

void set_level(Level level) noexcept;
[[nodiscard]] Level level() noexcept;
void write(Level level, std::string_view message);

template <typename... Args>
void emit(Level lvl, const Args&... args) {
  if (lvl < level()) return;
  std::ostringstream os;
  (os << ... << args);
  write(lvl, os.str());
}

template <typename... Args>
void info(const Args&... args) { emit(Level::info, args...); }
template <typename... Args>
void warn(const Args&... args) { emit(Level::warn, args...); }
template <typename... Args>
void error(const Args&... args) { emit(Level::error, args...); }

}  // namespace sensordash::log
