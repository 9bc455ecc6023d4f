#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace revstream::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::warn};
  return level;
}

inline void set_level(Level l) { threshold().store(l); }

inline void write(Level l, std::string_view msg) {
  if (l < threshold().load(std::memory_order_relaxed)) return;
  static std::mutex mu;
  static constexpr std::string_view names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mu);
  std::clog << "[revstream " << names[static_cast<int>(l)] << "] " << msg << '\n';
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void error(std::string_view msg) { write(Level::error, msg); }

}  // namespace revstream::log
