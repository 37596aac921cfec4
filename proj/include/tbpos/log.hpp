#pragma once

#include <string>

namespace tbpos {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Verbosity from the TBPOS_LOG environment variable (error|info|debug),
/// default info. Messages go to stderr; stdout stays machine-readable.
LogLevel log_level();

void log_error(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace tbpos
