#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace covseg::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// COVSEG_LOG=error|warn|info|debug, default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("COVSEG_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return Level::kError;
    if (v == "info") return Level::kInfo;
    if (v == "debug") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

inline void write(Level level, const std::string& message) {
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  if (level > threshold()) return;
  std::fprintf(stderr, "[covseg %s] %s\n", kNames[static_cast<int>(level)], message.c_str());
}

inline void error(const std::string& m) { write(Level::kError, m); }
inline void warn(const std::string& m) { write(Level::kWarn, m); }
inline void info(const std::string& m) { write(Level::kInfo, m); }
inline void debug(const std::string& m) { write(Level::kDebug, m); }

}  // namespace covseg::log
