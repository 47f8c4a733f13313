#include "baro/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

#include "baro/errors.hpp"

namespace baro {

namespace {
std::atomic<LogLevel> g_level{LogLevel::kInfo};
std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
    std::fflush(stderr);
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }

void set_log_level(const std::string& name) {
    if (name == "error") {
        set_log_level(LogLevel::kError);
    } else if (name == "warn") {
        set_log_level(LogLevel::kWarn);
    } else if (name == "info") {
        set_log_level(LogLevel::kInfo);
    } else if (name == "debug") {
        set_log_level(LogLevel::kDebug);
    } else {
        throw InvalidInputError("unknown log level: " + name);
    }
}

LogLevel log_level() { return g_level.load(); }

void log_error(const std::string& msg) { emit("error", msg); }

void log_warn(const std::string& msg) {
    if (g_level.load() >= LogLevel::kWarn) emit("warn", msg);
}

void log_info(const std::string& msg) {
    if (g_level.load() >= LogLevel::kInfo) emit("info", msg);
}

void log_debug(const std::string& msg) {
    if (g_level.load() >= LogLevel::kDebug) emit("debug", msg);
}

}  // namespace baro
