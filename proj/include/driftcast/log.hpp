#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace driftcast::log {

enum class Level { debug, info, warning, error };

using Sink = std::function<void(Level, const std::string&)>;

namespace detail {
inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}
inline Sink& sink() {
    static Sink s = [](Level level, const std::string& msg) {
        if (level == Level::debug) return;
        static const char* names[] = {"debug", "info", "warning", "error"};
        std::clog << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
    };
    return s;
}
}  // namespace detail

/// Replaces the process-wide sink and returns the previous one.
inline Sink set_sink(Sink s) {
    std::lock_guard lock(detail::mutex());
    Sink old = std::move(detail::sink());
    detail::sink() = std::move(s);
    return old;
}

inline void write(Level level, const std::string& msg) {
    std::lock_guard lock(detail::mutex());
    if (detail::sink()) detail::sink()(level, msg);
}

inline void debug(const std::string& msg) { write(Level::debug, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void warn(const std::string& msg) { write(Level::warning, msg); }
inline void error(const std::string& msg) { write(Level::error, msg); }

}  // namespace driftcast::log
