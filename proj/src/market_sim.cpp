#include "elastica/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "elastica/errors.hpp"

namespace elastica {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Scenario Scenario::from_config(const Config& cfg) {
    Scenario s;
    s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<std::int64_t>(s.seed)));
    s.n_hotels = static_cast<int>(cfg.get_int("n_hotels", s.n_hotels));
    s.rooms_per_hotel = static_cast<int>(cfg.get_int("rooms_per_hotel", s.rooms_per_hotel));
    s.n_groups = static_cast<int>(cfg.get_int("n_groups", s.n_groups));
    s.horizon_days = static_cast<int>(cfg.get_int("horizon_days", s.horizon_days));
    s.train_days = static_cast<int>(cfg.get_int("train_days", s.train_days));
    s.start = parse_night(cfg.get_string("start", format_night(s.start)));
    s.bounds = PriceBounds(cfg.get_double("p_min", s.bounds.p_min()), cfg.get_double("p_max", s.bounds.p_max()));
    s.seasonality_amplitude = cfg.get_double("seasonality_amplitude", s.seasonality_amplitude);
    s.noise = cfg.get_bool("noise", s.noise);
    s.integer_counts = cfg.get_bool("integer_counts", s.integer_counts);
    s.k_benchmark = cfg.get_double("k_benchmark", s.k_benchmark);
    s.avg_sales_min = cfg.get_double("avg_sales_min", s.avg_sales_min);
    s.avg_sales_max = cfg.get_double("avg_sales_max", s.avg_sales_max);
    s.inventory_min = static_cast<int>(cfg.get_int("inventory_min", s.inventory_min));
    s.inventory_max = static_cast<int>(cfg.get_int("inventory_max", s.inventory_max));
    s.elasticity_spread = cfg.get_double("elasticity_spread", s.elasticity_spread);
    s.natural_growth_max = cfg.get_double("natural_growth_max", s.natural_growth_max);
    s.observe_fraction = cfg.get_double("observe_fraction", s.observe_fraction);
    s.click_rate = cfg.get_double("click_rate", s.click_rate);
    s.search_rate = cfg.get_double("search_rate", s.search_rate);
    s.competitor_noise = cfg.get_double("competitor_noise", s.competitor_noise);
    s.competitor_missing = cfg.get_double("competitor_missing", s.competitor_missing);
    if (cfg.has("fixed_price")) s.fixed_price = cfg.get_double("fixed_price", 0.0);
    for (const auto& t : cfg.table_array("curve")) {
        const auto rid = static_cast<RoomId>(table_double(t, "rid"));
        auto b_it = t.find("b");
        const double b = b_it == t.end() ? 0.0 : table_double(t, "b");
        s.true_curves.insert_or_assign(rid, ExpDemandCurve(table_double(t, "q0"), table_double(t, "w"), b));
    }
    s.validate();
    return s;
}

Config Scenario::to_config() const {
    Config c;
    c.set("seed", static_cast<std::int64_t>(seed));
    c.set("n_hotels", static_cast<std::int64_t>(n_hotels));
    c.set("rooms_per_hotel", static_cast<std::int64_t>(rooms_per_hotel));
    c.set("n_groups", static_cast<std::int64_t>(n_groups));
    c.set("horizon_days", static_cast<std::int64_t>(horizon_days));
    c.set("train_days", static_cast<std::int64_t>(train_days));
    c.set("start", format_night(start));
    c.set("p_min", bounds.p_min());
    c.set("p_max", bounds.p_max());
    c.set("seasonality_amplitude", seasonality_amplitude);
    c.set("noise", noise);
    c.set("integer_counts", integer_counts);
    c.set("k_benchmark", k_benchmark);
    c.set("avg_sales_min", avg_sales_min);
    c.set("avg_sales_max", avg_sales_max);
    c.set("inventory_min", static_cast<std::int64_t>(inventory_min));
    c.set("inventory_max", static_cast<std::int64_t>(inventory_max));
    c.set("elasticity_spread", elasticity_spread);
    c.set("natural_growth_max", natural_growth_max);
    c.set("observe_fraction", observe_fraction);
    c.set("click_rate", click_rate);
    c.set("search_rate", search_rate);
    c.set("competitor_noise", competitor_noise);
    c.set("competitor_missing", competitor_missing);
    if (fixed_price) c.set("fixed_price", *fixed_price);
    return c;
}

void Scenario::validate() const {
    if (n_hotels < 1 || rooms_per_hotel < 1) throw UsageError("scenario: market must contain at least one room");
    if (n_groups < 1 || n_groups > n_hotels) throw UsageError("scenario: n_groups must lie in [1, n_hotels]");
    if (horizon_days < 1) throw UsageError("scenario: horizon_days must be >= 1");
    if (train_days < 1 || train_days > horizon_days) throw UsageError("scenario: train_days must lie in [1, horizon_days]");
    if (seasonality_amplitude < 0.0 || seasonality_amplitude >= 1.0) {
        throw UsageError("scenario: seasonality_amplitude must lie in [0, 1)");
    }
    if (!(k_benchmark > 0.0)) throw UsageError("scenario: k_benchmark must be positive");
    if (!(avg_sales_min > 0.0) || avg_sales_max < avg_sales_min) throw UsageError("scenario: invalid avg_sales range");
    if (inventory_min < 1 || inventory_max < inventory_min) throw UsageError("scenario: invalid inventory range");
    if (observe_fraction <= 0.0 || observe_fraction > 1.0) throw UsageError("scenario: observe_fraction must lie in (0, 1]");
    if (competitor_missing < 0.0 || competitor_missing > 1.0) throw UsageError("scenario: competitor_missing must lie in [0, 1]");
    if (fixed_price && !bounds.contains(*fixed_price)) throw UsageError("scenario: fixed_price outside bounds");
    for (const auto& [rid, c] : true_curves) {
        if (c.w() < bounds.w_lower() || c.w() > bounds.w_upper()) {
            throw UsageError("scenario: curve for rid " + std::to_string(rid) + " has w outside [-1/p_min, -1/p_max]");
        }
    }
}

Market generate_market(const Scenario& s) {
    s.validate();
    Market m;
    std::mt19937_64 rng(derive_seed(s.seed, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> band(0, 2);

    const double lo = s.bounds.p_min();
    const double hi = s.bounds.p_max();
    const double span = hi - lo;
    std::vector<double> group_price(static_cast<std::size_t>(s.n_groups));
    for (auto& p : group_price) p = lo + span * (0.2 + 0.6 * unit(rng));

    for (int h = 0; h < s.n_hotels; ++h) {
        const int g = h % s.n_groups;
        const int decoration = band(rng);
        const int review = band(rng);
        for (int j = 0; j < s.rooms_per_hotel; ++j) {
            RoomType r;
            r.rid = h * s.rooms_per_hotel + j;
            r.shid = h;
            r.inventory = std::uniform_int_distribution<int>(s.inventory_min, s.inventory_max)(rng);
            r.avg_sales = s.avg_sales_min + (s.avg_sales_max - s.avg_sales_min) * unit(rng);
            r.features.location = g / 2;
            r.features.district = g;
            r.features.star = g % 4;
            r.features.size_band = j % 3;
            r.features.decoration_band = decoration;
            r.features.review_band = review;

            // Larger, better-reviewed rooms tolerate higher prices.
            const double tilt = 0.5 * (r.features.size_band - 1) + 0.5 * (review - 1);
            double p_star = group_price[static_cast<std::size_t>(g)] * (1.0 + s.elasticity_spread * tilt);
            p_star = std::clamp(p_star, lo, hi);
            const double q0 = s.k_benchmark * r.avg_sales;
            const double b = s.natural_growth_max * unit(rng) * q0 * p_star;

            m.rooms.push_back(r);
            m.planted_group[r.rid] = g;
            m.reference_price[r.rid] = p_star;
            m.true_curves.insert_or_assign(r.rid, ExpDemandCurve(q0, -1.0 / p_star, b));
        }
    }
    for (const auto& [rid, curve] : s.true_curves) {
        if (!m.true_curves.count(rid)) throw UsageError("scenario: curve for unknown rid " + std::to_string(rid));
        m.true_curves.insert_or_assign(rid, curve);
        m.reference_price[rid] = std::clamp(curve.stationary_price(), lo, hi);
    }
    return m;
}

double seasonal_factor(const Scenario& s, Night night) {
    const double a = s.seasonality_amplitude;
    if (a == 0.0) return 1.0;
    const double annual = 1.0 + a * std::sin(2.0 * std::numbers::pi * day_of_year(night) / 365.25);
    return annual * (is_weekend(night) ? 1.0 + a : 1.0);
}

namespace {

struct RoomLogs {
    std::vector<ReservationRecord> reservations;
    std::vector<BehaviorSeries> behavior;
};

double draw_count(std::mt19937_64& rng, double mean, bool noise, bool integer_counts) {
    if (mean <= 0.0) return 0.0;
    if (!noise) return integer_counts ? std::round(mean) : mean;
    return static_cast<double>(std::poisson_distribution<long>(mean)(rng));
}

RoomLogs simulate_room(const RoomType& room, const ExpDemandCurve& curve, double reference_price,
                       const Scenario& s) {
    RoomLogs out;
    std::mt19937_64 rng(derive_seed(s.seed, 1000 + static_cast<std::uint64_t>(room.rid)));
    std::uniform_real_distribution<double> price_dist(s.bounds.p_min(), s.bounds.p_max());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double inventory = static_cast<double>(room.inventory);

    for (int d = 0; d < s.horizon_days; ++d) {
        const Night night{s.start.days + d};
        // Draws happen unconditionally so one room's stream does not depend on
        // which of its nights end up observed.
        const bool observed = unit(rng) < s.observe_fraction;
        const double price = s.fixed_price ? *s.fixed_price : price_dist(rng);
        const double mean = seasonal_factor(s, night) * exp_demand(curve, price);
        const double quantity = std::min(draw_count(rng, mean, s.noise, s.integer_counts), inventory);
        const double clicks = draw_count(rng, s.click_rate * mean, s.noise, s.integer_counts);
        const double searches = draw_count(rng, s.search_rate * mean, s.noise, s.integer_counts);
        const bool competitor_missing = s.noise && unit(rng) < s.competitor_missing;
        const double competitor = reference_price * (1.0 + (s.noise ? s.competitor_noise * gauss(rng) : 0.0));
        if (!observed) continue;

        out.reservations.push_back(ReservationRecord{room.rid, night, price, quantity});
        BehaviorSeries b;
        b.rid = room.rid;
        b.night = night;
        b.clicks = clicks;
        b.searches = searches;
        b.sale_price = price;
        b.booking_price = quantity > 0.0 ? price : 0.0;
        b.occupancy = quantity / inventory;
        if (!competitor_missing) b.competitor_price = competitor;
        out.behavior.push_back(b);
    }
    return out;
}

}  // namespace

SimulatedLogs simulate_logs(const Market& market, const Scenario& s) {
    if (s.horizon_days < 1) throw UsageError("simulate_logs: horizon_days must be >= 1");
    std::vector<RoomType> rooms = market.rooms;
    std::sort(rooms.begin(), rooms.end(), [](const RoomType& a, const RoomType& b) { return a.rid < b.rid; });
    std::vector<RoomLogs> per_room(rooms.size());

    const long n = static_cast<long>(rooms.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto& room = rooms[static_cast<std::size_t>(i)];
        per_room[static_cast<std::size_t>(i)] =
            simulate_room(room, market.true_curves.at(room.rid), market.reference_price.at(room.rid), s);
    }

    SimulatedLogs logs;
    for (auto& r : per_room) {
        logs.reservations.insert(logs.reservations.end(), r.reservations.begin(), r.reservations.end());
        logs.behavior.insert(logs.behavior.end(), r.behavior.begin(), r.behavior.end());
    }
    return logs;
}

std::size_t bucket_count(Granularity g) {
    switch (g) {
        case Granularity::day: return 31;
        case Granularity::week: return 7;
        case Granularity::month: return 12;
    }
    return 0;
}

int bucket_of(Night n, Granularity g) {
    switch (g) {
        case Granularity::day: return day_of_month(n) - 1;
        case Granularity::week: return day_of_week(n);
        case Granularity::month: return month_of_year(n) - 1;
    }
    return 0;
}

namespace {

// Identifies the period a bucket share is computed within.
long period_of(Night n, Granularity g) {
    switch (g) {
        case Granularity::day: {
            // months since epoch
            const int m = month_of_year(n);
            const int doy_offset = n.days - day_of_year(n);  // Jan 1 of this year
            return static_cast<long>(doy_offset) * 16 + m;
        }
        case Granularity::week:
            // 1970-01-05 was a Monday
            return static_cast<long>(std::floor((n.days - 4) / 7.0));
        case Granularity::month: return n.days - day_of_year(n);
    }
    return 0;
}

}  // namespace

ProportionSeries long_term_proportions(std::span<const DatedValue> values, Granularity g) {
    const std::size_t k = bucket_count(g);
    std::map<long, std::vector<double>> periods;
    for (const auto& v : values) {
        auto& bucket = periods[period_of(v.night, g)];
        if (bucket.empty()) bucket.assign(k, 0.0);
        bucket[static_cast<std::size_t>(bucket_of(v.night, g))] += v.value;
    }
    ProportionSeries out;
    out.values.assign(k, 0.0);
    int contributing = 0;
    for (const auto& [_, bucket] : periods) {
        double total = 0.0;
        for (double x : bucket) total += x;
        if (total <= 0.0) continue;
        for (std::size_t i = 0; i < k; ++i) out.values[i] += bucket[i] / total;
        ++contributing;
    }
    if (contributing == 0) {
        out.empty = true;
        return out;
    }
    for (double& x : out.values) x /= contributing;
    return out;
}

ProportionSeries long_term_proportions(std::span<const ReservationRecord> records, std::span<const RoomType> rooms,
                                       const std::set<HotelId>& region, Granularity g) {
    if (region.empty()) throw UsageError("long_term_proportions: region must be nonempty");
    std::set<RoomId> members;
    for (const auto& r : rooms) {
        if (region.count(r.shid)) members.insert(r.rid);
    }
    std::vector<DatedValue> values;
    for (const auto& rec : records) {
        if (members.count(rec.rid)) values.push_back({rec.night, rec.quantity});
    }
    return long_term_proportions(values, g);
}

}  // namespace elastica
