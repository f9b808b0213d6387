#include "oilfield/dates.hpp"

#include <chrono>
#include <cstdio>

namespace oilfield {

namespace {

namespace chr = std::chrono;

chr::year_month_day to_ymd(std::int64_t days) {
    return chr::year_month_day{chr::sys_days{chr::days{days}}};
}

} // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    return Date{chr::sys_days{ymd}.time_since_epoch().count()};
}

std::optional<Date> Date::parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i == 4 || i == 7) continue;
        if (text[i] < '0' || text[i] > '9') return std::nullopt;
    }
    const int year = std::stoi(text.substr(0, 4));
    const unsigned month = static_cast<unsigned>(std::stoi(text.substr(5, 2)));
    const unsigned day = static_cast<unsigned>(std::stoi(text.substr(8, 2)));
    const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return Date{chr::sys_days{ymd}.time_since_epoch().count()};
}

std::string Date::to_string() const {
    const auto ymd = to_ymd(days_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace oilfield
