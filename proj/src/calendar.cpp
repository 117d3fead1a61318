#include "elastica/calendar.hpp"

#include <chrono>
#include <cstdio>

#include "elastica/errors.hpp"

namespace elastica {

namespace chr = std::chrono;

namespace {

chr::year_month_day to_ymd(Night n) {
    return chr::year_month_day{chr::sys_days{chr::days{n.days}}};
}

}  // namespace

Night parse_night(std::string_view iso_date) {
    int y = 0;
    unsigned m = 0, d = 0;
    const std::string s(iso_date);
    if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) {
        throw DataError("invalid date '" + s + "', expected YYYY-MM-DD");
    }
    const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + s + "'");
    return Night{static_cast<int>(chr::sys_days{ymd}.time_since_epoch().count())};
}

std::string format_night(Night n) {
    const auto ymd = to_ymd(n);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int day_of_week(Night n) {
    return static_cast<int>(chr::weekday{chr::sys_days{chr::days{n.days}}}.iso_encoding()) - 1;
}

int day_of_month(Night n) { return static_cast<int>(static_cast<unsigned>(to_ymd(n).day())); }

int month_of_year(Night n) { return static_cast<int>(static_cast<unsigned>(to_ymd(n).month())); }

int day_of_year(Night n) {
    const auto ymd = to_ymd(n);
    const chr::sys_days jan1{chr::year_month_day{ymd.year(), chr::January, chr::day{1}}};
    return n.days - static_cast<int>(jan1.time_since_epoch().count());
}

bool is_weekend(Night n) {
    const int dow = day_of_week(n);
    return dow == 4 || dow == 5;
}

}  // namespace elastica
