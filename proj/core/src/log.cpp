#include "expand/log.hpp"

#include <spdlog/spdlog.h>

namespace expand::log {

namespace {

spdlog::level::level_enum to_spdlog(Level level) {
    switch (level) {
        case Level::kDebug: return spdlog::level::debug;
        case Level::kInfo: return spdlog::level::info;
        case Level::kWarn: return spdlog::level::warn;
        case Level::kError: return spdlog::level::err;
    }
    return spdlog::level::info;
}

}  // namespace

void write(Level level, const std::string& message) { spdlog::log(to_spdlog(level), "{}", message); }

void set_level(Level level) { spdlog::set_level(to_spdlog(level)); }

}  // namespace expand::log
