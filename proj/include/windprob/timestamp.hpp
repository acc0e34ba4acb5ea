#pragma once

#include "windprob/error.hpp"

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace windprob {

/// UTC instant at hourly resolution, stored as whole hours since the Unix epoch.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::int64_t hours_since_epoch) : hours_(hours_since_epoch) {}

    static Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour) {
        using namespace std::chrono;
        const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
        require(ymd.ok(), ErrorCode::Parse, "invalid calendar date");
        require(hour < 24, ErrorCode::Parse, "hour out of range");
        const auto days = sys_days{ymd}.time_since_epoch().count();
        return Timestamp(static_cast<std::int64_t>(days) * 24 + hour);
    }

    /// Accepts `YYYY-MM-DDTHH:MM:SS` with optional trailing `Z`; a space may replace `T`.
    static Timestamp parse(std::string_view text) {
        int y = 0;
        unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
        char sep = 0;
        const std::string buf(text);
        const int n = std::sscanf(buf.c_str(), "%d-%u-%u%c%u:%u:%u", &y, &mo, &d, &sep, &h, &mi, &s);
        require(n == 7 && (sep == 'T' || sep == ' '), ErrorCode::Parse, "bad timestamp '" + buf + "'");
        require(mi == 0 && s == 0, ErrorCode::Parse, "timestamp not on the hour '" + buf + "'");
        return from_civil(y, mo, d, h);
    }

    constexpr std::int64_t hours() const { return hours_; }

    int year() const { return static_cast<int>(civil().year()); }

    std::string to_string() const {
        const auto ymd = civil();
        const auto h = static_cast<unsigned>(((hours_ % 24) + 24) % 24);
        char out[32];
        std::snprintf(out, sizeof out, "%04d-%02u-%02uT%02u:00:00Z", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h);
        return out;
    }

    constexpr Timestamp operator+(std::int64_t h) const { return Timestamp(hours_ + h); }
    constexpr auto operator<=>(const Timestamp&) const = default;

private:
    std::chrono::year_month_day civil() const {
        using namespace std::chrono;
        const std::int64_t days = hours_ >= 0 ? hours_ / 24 : (hours_ - 23) / 24;
        return year_month_day{sys_days{std::chrono::days{days}}};
    }

    std::int64_t hours_ = 0;
};

} // namespace windprob
