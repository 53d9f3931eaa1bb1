#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace evalplan {

// Calendar day, no time of day and no time zone. Text form is YYYY-MM-DD.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}) {}

    // Strict YYYY-MM-DD; returns nullopt on any other shape or an invalid day.
    static std::optional<Date> parse(std::string_view text) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        if (!digits(text.substr(0, 4), y) || !digits(text.substr(5, 2), m) || !digits(text.substr(8, 2), d)) {
            return std::nullopt;
        }
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date(std::chrono::sys_days{ymd});
    }

    std::string to_string() const {
        const std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    constexpr std::chrono::sys_days days() const noexcept { return days_; }

    constexpr Date plus_days(long long n) const { return Date(days_ + std::chrono::days{n}); }

    // Signed day difference this - other.
    constexpr long long minus(const Date& other) const { return (days_ - other.days_).count(); }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    template <typename T>
    static bool digits(std::string_view s, T& out) {
        for (const char c : s) {
            if (c < '0' || c > '9') return false;
        }
        const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        return res.ec == std::errc{} && res.ptr == s.data() + s.size();
    }

    std::chrono::sys_days days_{};
};

}  // namespace evalplan
