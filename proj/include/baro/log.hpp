#pragma once

#include <string>

namespace baro {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

void set_log_level(LogLevel level);
void set_log_level(const std::string& name);  // error|warn|info|debug
LogLevel log_level();

void log_error(const std::string& msg);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace baro
