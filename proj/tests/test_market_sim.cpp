#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "elastica/errors.hpp"
#include "elastica/market_sim.hpp"

using namespace elastica;

namespace {

Scenario small_scenario() {
    Scenario s;
    s.seed = 3;
    s.n_hotels = 4;
    s.rooms_per_hotel = 3;
    s.n_groups = 2;
    return s;
}

std::string dump(const SimulatedLogs& logs) {
    return records_to_jsonl(logs.reservations) + records_to_jsonl(logs.behavior);
}

}  // namespace

TEST(GenerateMarket, CountsAndHotelIds) {
    Scenario s;
    s.n_hotels = 2;
    s.rooms_per_hotel = 3;
    s.n_groups = 1;
    const auto m = generate_market(s);
    ASSERT_EQ(m.rooms.size(), 6u);
    std::set<HotelId> shids;
    std::set<RoomId> rids;
    for (const auto& r : m.rooms) {
        shids.insert(r.shid);
        rids.insert(r.rid);
    }
    EXPECT_EQ(shids, (std::set<HotelId>{0, 1}));
    EXPECT_EQ(rids.size(), 6u);
}

TEST(GenerateMarket, CurvesRespectBoundsAndGroupsShareCodes) {
    Scenario s;
    s.n_hotels = 20;
    s.n_groups = 10;
    const auto m = generate_market(s);
    for (const auto& [rid, c] : m.true_curves) {
        EXPECT_GE(c.w(), s.bounds.w_lower());
        EXPECT_LE(c.w(), s.bounds.w_upper());
        EXPECT_GE(c.b(), 0.0);
    }
    std::map<int, StaticFeatures> first;
    for (const auto& r : m.rooms) {
        const int g = m.planted_group.at(r.rid);
        auto [it, inserted] = first.emplace(g, r.features);
        EXPECT_EQ(r.features.district, it->second.district);
        EXPECT_EQ(r.features.location, it->second.location);
        EXPECT_EQ(r.features.star, it->second.star);
    }
    EXPECT_EQ(first.size(), 10u);
}

TEST(GenerateMarket, RejectsEmptyMarketAndBadCurves) {
    Scenario s;
    s.n_hotels = 0;
    EXPECT_THROW(generate_market(s), UsageError);
    Scenario t;
    t.horizon_days = 0;
    EXPECT_THROW(generate_market(t), UsageError);
    Scenario u;
    u.true_curves.insert_or_assign(0, ExpDemandCurve(5.0, -1.0 / 20.0));  // P* below p_min
    EXPECT_THROW(generate_market(u), UsageError);
}

TEST(SimulateLogs, DeterministicForSeed) {
    const auto s = small_scenario();
    const auto a = simulate_logs(generate_market(s), s);
    const auto b = simulate_logs(generate_market(s), s);
    EXPECT_EQ(dump(a), dump(b));
    auto t = s;
    t.seed = 4;
    EXPECT_NE(dump(simulate_logs(generate_market(t), t)), dump(a));
}

TEST(SimulateLogs, InvariantsHold) {
    auto s = small_scenario();
    s.horizon_days = 60;
    const auto m = generate_market(s);
    const auto logs = simulate_logs(m, s);
    std::map<RoomId, int> inventory;
    for (const auto& r : m.rooms) inventory[r.rid] = r.inventory;
    std::set<std::pair<RoomId, int>> seen;
    for (const auto& r : logs.reservations) {
        EXPECT_TRUE(s.bounds.contains(r.price));
        EXPECT_GE(r.quantity, 0.0);
        EXPECT_LE(r.quantity, inventory.at(r.rid));
        EXPECT_TRUE(seen.insert({r.rid, r.night.days}).second);
    }
    for (const auto& b : logs.behavior) {
        EXPECT_GE(b.clicks, 0.0);
        EXPECT_GE(b.searches, 0.0);
        EXPECT_GE(b.occupancy, 0.0);
        EXPECT_LE(b.occupancy, 1.0);
    }
    EXPECT_EQ(logs.reservations.size(), m.rooms.size() * 60);
}

TEST(SimulateLogs, NoiselessQuantityIsRoundedMean) {
    auto s = small_scenario();
    s.noise = false;
    s.seasonality_amplitude = 0.0;
    const auto m = generate_market(s);
    const auto logs = simulate_logs(m, s);
    std::map<RoomId, int> inventory;
    for (const auto& r : m.rooms) inventory[r.rid] = r.inventory;
    for (const auto& r : logs.reservations) {
        const double f = exp_demand(m.true_curves.at(r.rid), r.price);
        EXPECT_EQ(r.quantity, std::min(std::round(f), static_cast<double>(inventory.at(r.rid))));
    }
    s.integer_counts = false;
    for (const auto& r : simulate_logs(m, s).reservations) {
        const double f = exp_demand(m.true_curves.at(r.rid), r.price);
        EXPECT_EQ(r.quantity, std::min(f, static_cast<double>(inventory.at(r.rid))));
    }
}

TEST(SimulateLogs, LawOfLargeNumbersAtFixedPrice) {
    Scenario s;
    s.n_hotels = 1;
    s.rooms_per_hotel = 1;
    s.n_groups = 1;
    s.horizon_days = 12000;
    s.train_days = 30;
    s.fixed_price = 150.0;
    s.inventory_min = s.inventory_max = 60;
    const auto m = generate_market(s);
    const auto logs = simulate_logs(m, s);
    const auto& curve = m.true_curves.begin()->second;
    double sample = 0.0, expected = 0.0;
    for (const auto& r : logs.reservations) {
        sample += r.quantity;
        expected += std::min(seasonal_factor(s, r.night) * exp_demand(curve, 150.0), 60.0);
    }
    ASSERT_EQ(logs.reservations.size(), 12000u);
    EXPECT_NEAR(sample / expected, 1.0, 0.02);
}

TEST(SimulateLogs, ObserveFractionThinsRecords) {
    auto s = small_scenario();
    s.horizon_days = 200;
    s.observe_fraction = 0.3;
    const auto logs = simulate_logs(generate_market(s), s);
    const double frac = static_cast<double>(logs.reservations.size()) / (12.0 * 200.0);
    EXPECT_NEAR(frac, 0.3, 0.04);
    EXPECT_EQ(logs.reservations.size(), logs.behavior.size());
}

TEST(ScenarioConfig, RoundTrip) {
    auto s = small_scenario();
    s.fixed_price = 120.0;
    s.integer_counts = false;
    const auto back = Scenario::from_config(Config::parse(s.to_config().canonical()));
    EXPECT_EQ(back.to_config().canonical(), s.to_config().canonical());
    EXPECT_THROW(Scenario::from_config(Config::parse("horizon_days = 0\n")), UsageError);
}

TEST(SeasonalFactor, FlatWithoutAmplitude) {
    Scenario s;
    s.seasonality_amplitude = 0.0;
    for (int d = 0; d < 400; ++d) EXPECT_EQ(seasonal_factor(s, Night{19000 + d}), 1.0);
}

TEST(Proportions, AllMondays) {
    std::vector<DatedValue> v;
    const Night monday = parse_night("2024-03-04");
    for (int w = 0; w < 4; ++w) v.push_back({Night{monday.days + 7 * w}, 5.0});
    const auto p = long_term_proportions(v, Granularity::week);
    EXPECT_EQ(p.values, (std::vector<double>{1, 0, 0, 0, 0, 0, 0}));
    EXPECT_FALSE(p.empty);
}

TEST(Proportions, UniformWeek) {
    std::vector<DatedValue> v;
    const Night monday = parse_night("2024-03-04");
    for (int d = 0; d < 28; ++d) v.push_back({Night{monday.days + d}, 3.0});
    for (double x : long_term_proportions(v, Granularity::week).values) EXPECT_NEAR(x, 1.0 / 7.0, 1e-12);
}

TEST(Proportions, MondayFridayMix) {
    std::vector<DatedValue> v;
    const Night monday = parse_night("2024-03-04");
    for (int w = 0; w < 4; ++w) {
        v.push_back({Night{monday.days + 7 * w}, 10.0});
        v.push_back({Night{monday.days + 7 * w + 4}, 30.0});
    }
    const auto p = long_term_proportions(v, Granularity::week);
    const std::vector<double> want{0.25, 0, 0, 0, 0.75, 0, 0};
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(p.values[i], want[i], 1e-12);
}

TEST(Proportions, EmptyIsFlagged) {
    const auto p = long_term_proportions(std::span<const DatedValue>{}, Granularity::month);
    EXPECT_TRUE(p.empty);
    EXPECT_EQ(p.values, std::vector<double>(12, 0.0));
    EXPECT_THROW(long_term_proportions(std::span<const ReservationRecord>{}, std::span<const RoomType>{}, {},
                                       Granularity::day),
                 UsageError);
}

// Property: every non-empty series is nonnegative and sums to one.
TEST(Proportions, SumToOneOnSimulatedLogs) {
    auto s = small_scenario();
    s.horizon_days = 120;
    const auto m = generate_market(s);
    const auto logs = simulate_logs(m, s);
    for (auto g : {Granularity::day, Granularity::week, Granularity::month}) {
        const auto p = long_term_proportions(logs.reservations, m.rooms, {0, 1}, g);
        ASSERT_FALSE(p.empty);
        EXPECT_EQ(p.values.size(), bucket_count(g));
        EXPECT_NEAR(std::accumulate(p.values.begin(), p.values.end(), 0.0), 1.0, 1e-12);
        for (double x : p.values) EXPECT_GE(x, 0.0);
    }
}

TEST(DeriveSeed, DistinctStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
