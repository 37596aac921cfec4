#include "tbpos/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace tbpos {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("TBPOS_LOG");
    if (env == nullptr) {
      return LogLevel::kInfo;
    }
    if (std::strcmp(env, "error") == 0 || std::strcmp(env, "quiet") == 0) {
      return LogLevel::kError;
    }
    if (std::strcmp(env, "debug") == 0) {
      return LogLevel::kDebug;
    }
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {

void emit(const char* tag, const std::string& message) {
  std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

}  // namespace

void log_error(const std::string& message) {
  emit("error", message);
}

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::kInfo) {
    emit("info", message);
  }
}

void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::kDebug) {
    emit("debug", message);
  }
}

}  // namespace tbpos
