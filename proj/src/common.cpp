#include "srx/common.hpp"

#include <cstring>

namespace srx {

namespace {

LogLevel initial_level() {
  const char* env = std::getenv("SRX_LOG");
  if (env == nullptr) return LogLevel::Info;
  if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel g_level = initial_level();

}  // namespace

LogLevel log_level() { return g_level; }

void set_log_level(LogLevel level) { g_level = level; }

void log_info(const std::string& msg) {
  if (g_level >= LogLevel::Info) std::fprintf(stderr, "[srx] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (g_level >= LogLevel::Debug) std::fprintf(stderr, "[srx:debug] %s\n", msg.c_str());
}

}  // namespace srx
