#pragma once

#include <string>
#include <string_view>

namespace elastica {

// A stay night, stored as days since 1970-01-01.
struct Night {
    int days = 0;

    friend auto operator<=>(const Night&, const Night&) = default;
};

Night parse_night(std::string_view iso_date);
std::string format_night(Night n);

int day_of_week(Night n);   // Monday = 0 ... Sunday = 6
int day_of_month(Night n);  // 1 ... 31
int month_of_year(Night n); // 1 ... 12
int day_of_year(Night n);   // 0 ... 365
bool is_weekend(Night n);   // Friday or Saturday night

}  // namespace elastica
