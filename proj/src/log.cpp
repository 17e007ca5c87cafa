#include "bfmadapt/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace bfma {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("BFM_ADAPT_LOG");
    if (env == nullptr) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

static void emit(const char* tag, const std::string& msg) {
  std::fprintf(stderr, "[bfm-adapt %s] %s\n", tag, msg.c_str());
}

void log_error(const std::string& msg) { emit("error", msg); }

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) emit("debug", msg);
}

}  // namespace bfma
