#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace oilfield {

/// Calendar date stored as days since 1970-01-01. Arithmetic is plain
/// integer math; parsing/formatting is fixed to ISO-8601 YYYY-MM-DD.
class Date {
public:
    Date() = default;
    explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int year, unsigned month, unsigned day);

    /// Parses strict YYYY-MM-DD; rejects impossible calendar dates.
    static std::optional<Date> parse(const std::string& text);

    std::string to_string() const;

    std::int64_t days_since_epoch() const { return days_; }

    Date operator+(std::int64_t days) const { return Date(days_ + days); }
    Date operator-(std::int64_t days) const { return Date(days_ - days); }
    std::int64_t operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() { ++days_; return *this; }

    auto operator<=>(const Date&) const = default;

private:
    std::int64_t days_ = 0;
};

} // namespace oilfield
