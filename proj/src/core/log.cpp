#include "core/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace amf::log {

namespace {

std::atomic<int> g_level{-1};
std::mutex g_mutex;

int level_from_env() {
  const char* env = std::getenv("GIBS_AMF_LOG");
  Level lvl = Level::Warn;
  if (env != nullptr) parse_level(env, &lvl);
  return static_cast<int>(lvl);
}

const char* level_tag(Level lvl) {
  switch (lvl) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    default: return "?";
  }
}

}  // namespace

Level level() {
  int lvl = g_level.load(std::memory_order_relaxed);
  if (lvl < 0) {
    lvl = level_from_env();
    g_level.store(lvl, std::memory_order_relaxed);
  }
  return static_cast<Level>(lvl);
}

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl), std::memory_order_relaxed); }

bool parse_level(const std::string& name, Level* out) {
  if (name == "debug") *out = Level::Debug;
  else if (name == "info") *out = Level::Info;
  else if (name == "warn") *out = Level::Warn;
  else if (name == "error") *out = Level::Error;
  else if (name == "off") *out = Level::Off;
  else return false;
  return true;
}

void write(Level lvl, const std::string& message) {
  if (static_cast<int>(lvl) < static_cast<int>(level())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[gibs-amf %s] %s\n", level_tag(lvl), message.c_str());
}

}  // namespace amf::log
