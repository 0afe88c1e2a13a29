#pragma once

#include <sstream>
#include <string>

namespace mc::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Reads MOUND_LOG once; defaults to warn.
Level threshold();
void set_threshold(Level level);
bool parse_level(const std::string& text, Level& out);

void write(Level level, const std::string& message);

template <typename... Args>
void emit(Level level, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <typename... Args>
void error(const Args&... args) { emit(Level::Error, args...); }
template <typename... Args>
void warn(const Args&... args) { emit(Level::Warn, args...); }
template <typename... Args>
void info(const Args&... args) { emit(Level::Info, args...); }
template <typename... Args>
void debug(const Args&... args) { emit(Level::Debug, args...); }

}  // namespace mc::log
