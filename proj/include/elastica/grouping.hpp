#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "elastica/records.hpp"

namespace elastica {

struct GroupAssignment {
    std::map<RoomId, int> group_of;
    std::vector<std::vector<double>> centroids;
    std::vector<int> group_size;
    // Within-cluster sum of squares after each Lloyd iteration.
    std::vector<double> objective_history;
    int iterations = 0;

    int k() const { return static_cast<int>(centroids.size()); }
    int group(RoomId rid) const;
    std::vector<RoomId> members(int group) const;
};

struct KMeansResult {
    std::vector<int> labels;
    std::vector<std::vector<double>> centroids;
    std::vector<double> objective_history;
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
// or after `max_iterations`.
KMeansResult kmeans(std::span<const std::vector<double>> points, int k, std::uint64_t seed,
                    int max_iterations = 100);

double within_cluster_ss(std::span<const std::vector<double>> points, std::span<const int> labels,
                         std::span<const std::vector<double>> centroids);

// One-hot encoding of the clustering features (location, district, star).
std::vector<std::vector<double>> encode_clustering_features(std::span<const RoomType> rooms);

int distinct_districts(std::span<const RoomType> rooms);

// Rooms are processed in rid order; k defaults to the number of districts when <= 0.
GroupAssignment kmeans_group(std::span<const RoomType> rooms, int k, std::uint64_t seed);

// Sums room reservations per (group, night, price bin). The group price is the
// booking-weighted mean price within the bin (plain mean when nothing booked).
std::vector<GroupRecord> aggregate_group(std::span<const ReservationRecord> records, const GroupAssignment& assignment,
                                         std::span<const RoomType> rooms, double bin_width);

std::string assignment_csv(const GroupAssignment& assignment);
GroupAssignment assignment_from_csv(const std::string& text);

}  // namespace elastica
