#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

#include "sensorhub/timeutil.hpp"

namespace sensorhub::log {

namespace detail {
inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

inline void write(std::string_view level, std::string_view message) {
    std::ostringstream line;
    line << format_iso8601_ms(now_epoch_ms()) << " [" << level << "] " << message << '\n';
    std::lock_guard lock(detail::mutex());
    std::cerr << line.str();
}

inline void info(std::string_view message) { write("info", message); }
inline void warn(std::string_view message) { write("warn", message); }
inline void error(std::string_view message) { write("error", message); }

}  // namespace sensorhub::log
