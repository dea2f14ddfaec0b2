#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace driftcast {

/// Whole hours since the configured epoch. All hours are UTC grid hours; daylight saving is ignored.
struct TimeIndex {
    std::int64_t hour = 0;

    constexpr auto operator<=>(const TimeIndex&) const = default;

    constexpr TimeIndex operator+(std::int64_t hours) const { return {hour + hours}; }
    constexpr TimeIndex operator-(std::int64_t hours) const { return {hour - hours}; }
    constexpr std::int64_t operator-(TimeIndex other) const { return hour - other.hour; }
    constexpr TimeIndex& operator++() {
        ++hour;
        return *this;
    }
};

inline constexpr std::int64_t kHoursPerDay = 24;
inline constexpr std::int64_t kHoursPerWeek = 168;
inline constexpr std::int64_t kHoursPerYear = 8760;  // 365-day year

enum class Period { quarter, year };

inline std::string_view to_string(Period p) { return p == Period::quarter ? "quarter" : "year"; }

inline std::optional<Period> parse_period(std::string_view s) {
    if (s == "quarter" || s == "quarterly") return Period::quarter;
    if (s == "year" || s == "yearly") return Period::year;
    return std::nullopt;
}

struct CalendarFields {
    int hour_of_day = 0;  // [0, 24)
    int weekday = 0;      // Monday = 0 ... Sunday = 6
    int day = 1;          // [1, 31]
    int month = 1;        // [1, 12]
    int quarter = 1;      // [1, 4]
    int year = 0;

    bool operator==(const CalendarFields&) const = default;
};

namespace weekdays {
inline constexpr int monday = 0;
inline constexpr int tuesday = 1;
inline constexpr int wednesday = 2;
inline constexpr int thursday = 3;
inline constexpr int friday = 4;
inline constexpr int saturday = 5;
inline constexpr int sunday = 6;
}  // namespace weekdays

/// Anchor of the hourly grid. Defaults to 2009-01-01T00:00 UTC.
class Epoch {
public:
    constexpr Epoch() = default;
    constexpr explicit Epoch(std::chrono::sys_days day) : day_(day) {}
    Epoch(int year, int month, int day)
        : day_(std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} /
               std::chrono::day{static_cast<unsigned>(day)}) {}

    constexpr std::chrono::sys_days day() const { return day_; }

    bool operator==(const Epoch&) const = default;

    /// Hour index of a civil UTC date-time. Fails if the date is invalid.
    TimeIndex at(int year, int month, int day, int hour = 0) const {
        using namespace std::chrono;
        const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                 std::chrono::day{static_cast<unsigned>(day)}};
        if (!ymd.ok() || hour < 0 || hour > 23) {
            throw std::invalid_argument("invalid civil date-time");
        }
        const auto days_since = (sys_days{ymd} - day_).count();
        return {static_cast<std::int64_t>(days_since) * kHoursPerDay + hour};
    }

    CalendarFields decompose(TimeIndex t) const {
        using namespace std::chrono;
        std::int64_t days_since = t.hour / kHoursPerDay;
        std::int64_t hod = t.hour % kHoursPerDay;
        if (hod < 0) {
            hod += kHoursPerDay;
            --days_since;
        }
        const sys_days d = day_ + days{days_since};
        const year_month_day ymd{d};
        CalendarFields f;
        f.hour_of_day = static_cast<int>(hod);
        f.weekday = static_cast<int>(weekday{d}.iso_encoding()) - 1;
        f.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
        f.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
        f.quarter = (f.month - 1) / 3 + 1;
        f.year = static_cast<int>(ymd.year());
        return f;
    }

    /// Shift by whole calendar months. Days past the end of the target month clamp to its last day.
    TimeIndex add_months(TimeIndex t, int months) const {
        const CalendarFields f = decompose(t);
        int total = f.year * 12 + (f.month - 1) + months;
        int y = total / 12;
        int m = total % 12;
        if (m < 0) {
            m += 12;
            --y;
        }
        using namespace std::chrono;
        const year_month_day_last last{std::chrono::year{y} / std::chrono::month{static_cast<unsigned>(m + 1)} / std::chrono::last};
        const int day = std::min(f.day, static_cast<int>(static_cast<unsigned>(last.day())));
        return at(y, m + 1, day, f.hour_of_day);
    }

    TimeIndex add_years(TimeIndex t, int years) const { return add_months(t, 12 * years); }

    TimeIndex add_periods(TimeIndex t, Period p, int n) const {
        return add_months(t, (p == Period::quarter ? 3 : 12) * n);
    }

    /// Start of the calendar quarter/year containing t.
    TimeIndex period_floor(TimeIndex t, Period p) const {
        const CalendarFields f = decompose(t);
        const int month = p == Period::quarter ? (f.quarter - 1) * 3 + 1 : 1;
        return at(f.year, month, 1, 0);
    }

    bool is_period_boundary(TimeIndex t, Period p) const { return period_floor(t, p) == t; }

    /// "YYYY-MM-DDTHH:00:00Z"
    std::string format(TimeIndex t) const {
        const CalendarFields f = decompose(t);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00Z", f.year, f.month, f.day, f.hour_of_day);
        return buf;
    }

    /// Accepts "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS[Z]", "YYYY-MM-DDTHH:MM[Z]", and "YYYY-MM-DD".
    /// Minutes and seconds are floored to the hour.
    std::optional<TimeIndex> parse(std::string_view text) const {
        while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
        while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r')) text.remove_suffix(1);
        if (text.size() < 10) return std::nullopt;
        auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
            if (pos + len > text.size()) return std::nullopt;
            int v = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                const char c = text[i];
                if (c < '0' || c > '9') return std::nullopt;
                v = v * 10 + (c - '0');
            }
            return v;
        };
        const auto y = digits(0, 4);
        const auto mo = digits(5, 2);
        const auto d = digits(8, 2);
        if (!y || !mo || !d || text[4] != '-' || text[7] != '-') return std::nullopt;
        int hour = 0;
        if (text.size() > 10) {
            if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
            const auto h = digits(11, 2);
            if (!h) return std::nullopt;
            hour = *h;
            std::string_view rest = text.substr(13);
            if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
            if (!rest.empty()) {
                if (rest.size() != 3 && rest.size() != 6) return std::nullopt;
                if (rest[0] != ':' || !digits(14, 2) || *digits(14, 2) > 59) return std::nullopt;
                if (rest.size() == 6 && (rest[3] != ':' || !digits(17, 2) || *digits(17, 2) > 60)) return std::nullopt;
            }
        }
        try {
            return at(*y, *mo, *d, hour);
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    }

private:
    std::chrono::sys_days day_{std::chrono::year{2009} / std::chrono::January / 1};
};

inline CalendarFields calendar_decompose(TimeIndex t, const Epoch& epoch = Epoch{}) { return epoch.decompose(t); }

/// Whole calendar years or quarters.
struct WindowDuration {
    int count = 2;
    Period unit = Period::year;

    bool operator==(const WindowDuration&) const = default;
};

/// Covers [end - duration, end) on the calendar.
struct SlidingWindow {
    WindowDuration duration;
    TimeIndex end;

    TimeIndex start(const Epoch& epoch) const { return epoch.add_periods(end, duration.unit, -duration.count); }
    bool contains(TimeIndex t, const Epoch& epoch) const { return t >= start(epoch) && t < end; }
};

}  // namespace driftcast
