#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "elastica/calendar.hpp"
#include "elastica/config.hpp"
#include "elastica/demand.hpp"
#include "elastica/records.hpp"

namespace elastica {

// Everything needed to generate a synthetic market deterministically.
struct Scenario {
    std::uint64_t seed = 7;
    int n_hotels = 20;
    int rooms_per_hotel = 3;
    int n_groups = 10;
    int horizon_days = 37;
    int train_days = 30;
    Night start = parse_night("2024-03-01");
    PriceBounds bounds{50.0, 300.0};
    double seasonality_amplitude = 0.2;
    bool noise = true;
    // Without noise, counts are the rounded expectation; false keeps the exact
    // expectation (useful for closed-form recovery checks).
    bool integer_counts = true;

    double k_benchmark = 1.1;
    double avg_sales_min = 3.0;
    double avg_sales_max = 8.0;
    int inventory_min = 12;
    int inventory_max = 24;
    // Relative spread of a room's optimal price around its group's.
    double elasticity_spread = 0.15;
    // Upper bound on b as a fraction of q0 * P* (natural-growth share).
    double natural_growth_max = 0.3;
    // Fraction of (room, night) pairs that appear in the logs.
    double observe_fraction = 1.0;
    double click_rate = 5.0;
    double search_rate = 9.0;
    double competitor_noise = 0.05;
    double competitor_missing = 0.2;
    // When set, every simulated night is priced at this value.
    std::optional<double> fixed_price;

    // Ground truth; generated from the seed unless supplied explicitly.
    std::map<RoomId, ExpDemandCurve> true_curves;

    static Scenario from_config(const Config& cfg);
    Config to_config() const;
    void validate() const;
};

struct Market {
    std::vector<RoomType> rooms;
    std::map<RoomId, ExpDemandCurve> true_curves;
    std::map<RoomId, int> planted_group;
    std::map<RoomId, double> reference_price;  // competitor platforms quote around this
};

struct SimulatedLogs {
    std::vector<ReservationRecord> reservations;
    std::vector<BehaviorSeries> behavior;
};

Market generate_market(const Scenario& scenario);

// Multiplicative demand factor for a night: annual sinusoid times a weekend bump.
double seasonal_factor(const Scenario& scenario, Night night);

SimulatedLogs simulate_logs(const Market& market, const Scenario& scenario);

enum class Granularity { day, week, month };

struct ProportionSeries {
    std::vector<double> values;  // 31 (day of month), 7 (day of week) or 12 (month)
    bool empty = false;          // no mass in the window; values are all zero
};

struct DatedValue {
    Night night;
    double value = 0.0;
};

// Per-period shares of each bucket, summed across periods and renormalized:
// weeks for the day-of-week series, months for day-of-month, years for month.
ProportionSeries long_term_proportions(std::span<const DatedValue> values, Granularity granularity);

// Sales proportions over all rooms whose hotel is in `region`.
ProportionSeries long_term_proportions(std::span<const ReservationRecord> records,
                                       std::span<const RoomType> rooms,
                                       const std::set<HotelId>& region, Granularity granularity);

std::size_t bucket_count(Granularity g);
int bucket_of(Night n, Granularity g);

// splitmix64 mixing, used to derive independent per-stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace elastica
