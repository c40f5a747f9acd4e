#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

// Thin logging front end. The spdlog backend lives in its own translation
// unit because libtorch ships an fmt that clashes with the one spdlog uses.
namespace expand::log {

enum class Level { kDebug, kInfo, kWarn, kError };

void write(Level level, const std::string& message);
void set_level(Level level);

namespace detail {

inline void append(std::ostringstream& out, std::string_view& pattern) { out << pattern; pattern = {}; }

template <typename T, typename... Rest>
void append(std::ostringstream& out, std::string_view& pattern, const T& value, const Rest&... rest) {
    const auto open = pattern.find('{');
    const auto close = open == std::string_view::npos ? open : pattern.find('}', open);
    if (close == std::string_view::npos) {
        out << pattern;
        pattern = {};
        return;
    }
    out << pattern.substr(0, open);
    const auto spec = pattern.substr(open + 1, close - open - 1);
    if (spec.size() >= 3 && spec.substr(0, 2) == ":." && spec.back() == 'f') {
        const auto flags = out.flags();
        const auto precision = out.precision();
        out << std::fixed << std::setprecision(std::stoi(std::string(spec.substr(2, spec.size() - 3)))) << value;
        out.flags(flags);
        out.precision(precision);
    } else {
        out << value;
    }
    pattern.remove_prefix(close + 1);
    append(out, pattern, rest...);
}

}  // namespace detail

/// Replaces `{}` (or `{:.Nf}`) placeholders in order.
template <typename... Args>
std::string format(std::string_view pattern, const Args&... args) {
    std::ostringstream out;
    detail::append(out, pattern, args...);
    return out.str();
}

template <typename... Args>
void info(std::string_view pattern, const Args&... args) {
    write(Level::kInfo, format(pattern, args...));
}

template <typename... Args>
void warn(std::string_view pattern, const Args&... args) {
    write(Level::kWarn, format(pattern, args...));
}

template <typename... Args>
void error(std::string_view pattern, const Args&... args) {
    write(Level::kError, format(pattern, args...));
}

}  // namespace expand::log
