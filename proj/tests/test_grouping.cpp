#include <random>

#include <gtest/gtest.h>

#include "elastica/errors.hpp"
#include "elastica/grouping.hpp"
#include "elastica/market_sim.hpp"

using namespace elastica;

namespace {

RoomType room(RoomId rid, int location, int district, int star, double avg_sales = 2.0) {
    RoomType r;
    r.rid = rid;
    r.shid = rid;
    r.inventory = 10;
    r.avg_sales = avg_sales;
    r.features.location = location;
    r.features.district = district;
    r.features.star = star;
    return r;
}

// Canonical form of a partition: label of each point renumbered by first appearance.
std::vector<int> canonical(const std::vector<int>& labels) {
    std::map<int, int> rename;
    std::vector<int> out;
    for (int l : labels) out.push_back(rename.emplace(l, static_cast<int>(rename.size())).first->second);
    return out;
}

double partition_wcss(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels, int k) {
    const std::size_t dim = pts[0].size();
    std::vector<std::vector<double>> c(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> n(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ++n[static_cast<std::size_t>(labels[i])];
        for (std::size_t d = 0; d < dim; ++d) c[static_cast<std::size_t>(labels[i])][d] += pts[i][d];
    }
    for (int j = 0; j < k; ++j) {
        if (n[static_cast<std::size_t>(j)] == 0) return std::numeric_limits<double>::infinity();
        for (auto& x : c[static_cast<std::size_t>(j)]) x /= n[static_cast<std::size_t>(j)];
    }
    return within_cluster_ss(pts, labels, c);
}

}  // namespace

TEST(KMeansGroup, SingletonClusters) {
    std::vector<RoomType> rooms{room(0, 0, 0, 0), room(1, 1, 1, 1), room(2, 0, 2, 3), room(3, 2, 3, 1)};
    const auto a = kmeans_group(rooms, 4, 1);
    const auto pts = encode_clustering_features(rooms);
    std::set<int> groups;
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        const int g = a.group(rooms[i].rid);
        groups.insert(g);
        EXPECT_EQ(a.centroids[static_cast<std::size_t>(g)], pts[i]);
    }
    EXPECT_EQ(groups.size(), 4u);
}

TEST(KMeansGroup, SingleClusterCentroidIsMean) {
    std::vector<RoomType> rooms{room(0, 0, 0, 0), room(1, 1, 1, 1), room(2, 0, 2, 3)};
    const auto a = kmeans_group(rooms, 1, 5);
    const auto pts = encode_clustering_features(rooms);
    for (std::size_t d = 0; d < pts[0].size(); ++d) {
        EXPECT_NEAR(a.centroids[0][d], (pts[0][d] + pts[1][d] + pts[2][d]) / 3.0, 1e-15);
    }
    EXPECT_EQ(a.group_size, std::vector<int>{3});
}

TEST(KMeansGroup, PlantedBlocksMatchBruteForceOptimum) {
    std::vector<RoomType> rooms;
    for (int i = 0; i < 12; ++i) {
        const int block = i % 3;
        rooms.push_back(room(i, block, block, block));
    }
    const auto pts = encode_clustering_features(rooms);
    std::vector<int> best_labels;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> labels(12, 0);
    for (int code = 0; code < 531441; ++code) {  // 3^12
        int c = code;
        for (int i = 0; i < 12; ++i) {
            labels[static_cast<std::size_t>(i)] = c % 3;
            c /= 3;
        }
        const double v = partition_wcss(pts, labels, 3);
        if (v < best - 1e-12) {
            best = v;
            best_labels = labels;
        }
    }
    const auto a = kmeans_group(rooms, 3, 11);
    std::vector<int> got;
    for (const auto& r : rooms) got.push_back(a.group(r.rid));
    EXPECT_EQ(canonical(got), canonical(best_labels));
    EXPECT_NEAR(a.objective_history.back(), best, 1e-12);
}

TEST(KMeansGroup, DefaultKIsDistrictCountAndRecoversSimulatedGroups) {
    Scenario s;
    const auto m = generate_market(s);
    const auto a = kmeans_group(m.rooms, 0, 1);
    EXPECT_EQ(a.k(), 10);
    std::map<int, int> planted_to_found;
    for (const auto& r : m.rooms) {
        auto [it, inserted] = planted_to_found.emplace(m.planted_group.at(r.rid), a.group(r.rid));
        EXPECT_EQ(it->second, a.group(r.rid));
    }
    for (int size : a.group_size) EXPECT_EQ(size, 6);
}

TEST(KMeansGroup, Errors) {
    std::vector<RoomType> rooms{room(0, 0, 0, 0)};
    EXPECT_THROW(kmeans_group(rooms, 2, 1), UsageError);
    EXPECT_THROW(kmeans_group(std::span<const RoomType>{}, 1, 1), UsageError);
    GroupAssignment a;
    EXPECT_THROW(a.group(3), DataError);
}

// Property: WCSS never increases and reruns reproduce the assignment.
TEST(KMeans, ObjectiveMonotoneAndDeterministic) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> pts(60, std::vector<double>(4));
        for (auto& p : pts) {
            for (auto& x : p) x = g(rng);
        }
        const auto a = kmeans(pts, 5, static_cast<std::uint64_t>(trial));
        for (std::size_t i = 1; i < a.objective_history.size(); ++i) {
            EXPECT_LE(a.objective_history[i], a.objective_history[i - 1] + 1e-12);
        }
        const auto b = kmeans(pts, 5, static_cast<std::uint64_t>(trial));
        EXPECT_EQ(a.labels, b.labels);
        EXPECT_LE(a.iterations, 100);
    }
}

TEST(AggregateGroup, SingleRoomIdentity) {
    std::vector<RoomType> rooms{room(4, 0, 0, 0, 3.0)};
    const auto a = kmeans_group(rooms, 1, 1);
    std::vector<ReservationRecord> recs{{4, Night{10}, 120.0, 3.0}, {4, Night{11}, 80.0, 0.0}};
    const auto g = aggregate_group(recs, a, rooms, 50.0);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].price, 120.0);
    EXPECT_EQ(g[0].quantity, 3.0);
    EXPECT_EQ(g[1].price, 80.0);
    EXPECT_EQ(g[1].quantity, 0.0);
    EXPECT_EQ(g[0].q_avg, 3.0);
}

TEST(AggregateGroup, AdditivityAndWeightedPrice) {
    std::vector<RoomType> rooms{room(0, 0, 0, 0, 1.0), room(1, 0, 0, 0, 2.0)};
    const auto a = kmeans_group(rooms, 1, 1);
    std::vector<ReservationRecord> same_bin{{0, Night{5}, 110.0, 3.0}, {1, Night{5}, 120.0, 4.0}};
    const auto g = aggregate_group(same_bin, a, rooms, 50.0);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g[0].quantity, 7.0);
    EXPECT_EQ(g[0].members, 2);
    EXPECT_EQ(g[0].q_avg, 3.0);

    std::vector<ReservationRecord> wide{{0, Night{5}, 100.0, 2.0}, {1, Night{5}, 200.0, 2.0}};
    const auto h = aggregate_group(wide, a, rooms, 500.0);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_DOUBLE_EQ(h[0].price, 150.0);
}

TEST(AggregateGroup, UnassignedRidIsDataError) {
    std::vector<RoomType> rooms{room(0, 0, 0, 0)};
    const auto a = kmeans_group(rooms, 1, 1);
    std::vector<ReservationRecord> recs{{9, Night{1}, 100.0, 1.0}};
    try {
        aggregate_group(recs, a, rooms, 50.0);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("rid 9"), std::string::npos);
    }
}

// Property: per night, group quantities sum to room quantities.
TEST(AggregateGroup, ConservesQuantityPerNight) {
    Scenario s;
    s.horizon_days = 20;
    s.train_days = 14;
    const auto m = generate_market(s);
    const auto logs = simulate_logs(m, s);
    const auto a = kmeans_group(m.rooms, 0, 3);
    const auto g = aggregate_group(logs.reservations, a, m.rooms, 50.0);
    std::map<int, double> room_total, group_total;
    for (const auto& r : logs.reservations) room_total[r.night.days] += r.quantity;
    for (const auto& r : g) group_total[r.night.days] += r.quantity;
    ASSERT_EQ(room_total.size(), group_total.size());
    for (const auto& [night, q] : room_total) EXPECT_NEAR(group_total.at(night), q, 1e-9);
}

TEST(AssignmentCsv, RoundTrip) {
    Scenario s;
    const auto m = generate_market(s);
    const auto a = kmeans_group(m.rooms, 0, 1);
    const auto b = assignment_from_csv(assignment_csv(a));
    EXPECT_EQ(b.group_of, a.group_of);
    EXPECT_EQ(b.group_size, a.group_size);
    EXPECT_THROW(assignment_from_csv("rid,group_id\n1;2\n"), DataError);
}
