#include "core/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mc::log {
namespace {

std::atomic<int> g_level{-1};
std::mutex g_write_mutex;

const char* level_tag(Level level) {
  switch (level) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

bool parse_level(const std::string& text, Level& out) {
  if (text == "error") out = Level::Error;
  else if (text == "warn") out = Level::Warn;
  else if (text == "info") out = Level::Info;
  else if (text == "debug") out = Level::Debug;
  else return false;
  return true;
}

Level threshold() {
  int lv = g_level.load(std::memory_order_relaxed);
  if (lv < 0) {
    Level parsed = Level::Warn;
    if (const char* env = std::getenv("MOUND_LOG")) parse_level(env, parsed);
    lv = static_cast<int>(parsed);
    g_level.store(lv, std::memory_order_relaxed);
  }
  return static_cast<Level>(lv);
}

void set_threshold(Level level) {
  g_level.store(static_cast<int>(level), std::memory_order_relaxed);
}

void write(Level level, const std::string& message) {
  std::lock_guard<std::mutex> lock(g_write_mutex);
  std::cerr << "[" << level_tag(level) << "] " << message << '\n';
}

}  // namespace mc::log
