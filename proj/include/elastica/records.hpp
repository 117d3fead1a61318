#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastica/calendar.hpp"

namespace elastica {

using RoomId = int;
using HotelId = int;

// Categorical descriptors of a room type. Codes are small non-negative ints.
struct StaticFeatures {
    int location = 0;
    int district = 0;
    int star = 0;
    int size_band = 0;
    int decoration_band = 0;
    int review_band = 0;

    friend bool operator==(const StaticFeatures&, const StaticFeatures&) = default;
};

inline constexpr int kStaticFeatureCount = 6;
inline constexpr const char* kStaticFeatureNames[kStaticFeatureCount] = {
    "location", "district", "star", "size_band", "decoration_band", "review_band"};

int static_code(const StaticFeatures& f, int index);

struct RoomType {
    RoomId rid = 0;
    HotelId shid = 0;
    int inventory = 1;
    double avg_sales = 0.0;  // benchmark Q_avg from the month before the log window
    StaticFeatures features;

    friend bool operator==(const RoomType&, const RoomType&) = default;
};

struct ReservationRecord {
    RoomId rid = 0;
    Night night;
    double price = 0.0;
    double quantity = 0.0;

    friend bool operator==(const ReservationRecord&, const ReservationRecord&) = default;
};

struct BehaviorSeries {
    RoomId rid = 0;
    Night night;
    double clicks = 0.0;
    double searches = 0.0;
    double sale_price = 0.0;
    double booking_price = 0.0;  // 0 when nothing was booked
    double occupancy = 0.0;
    std::optional<double> competitor_price;  // external platform quote, may be missing

    friend bool operator==(const BehaviorSeries&, const BehaviorSeries&) = default;
};

// Group-level aggregate of room reservations for one (group, night, price bin).
struct GroupRecord {
    int group = 0;
    Night night;
    double price = 0.0;     // booking-weighted mean price inside the bin
    double quantity = 0.0;  // summed over member rooms
    double q_avg = 0.0;     // summed benchmark sales of contributing rooms
    int members = 0;        // rooms contributing to the bin

    friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

nlohmann::json to_json(const RoomType& r);
nlohmann::json to_json(const ReservationRecord& r);
nlohmann::json to_json(const BehaviorSeries& r);
RoomType room_from_json(const nlohmann::json& j);
ReservationRecord reservation_from_json(const nlohmann::json& j);
BehaviorSeries behavior_from_json(const nlohmann::json& j);

// --- file helpers ---------------------------------------------------------

// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string to_jsonl(const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> parse_jsonl(const std::string& text, const std::string& origin);

template <typename T>
std::string records_to_jsonl(const std::vector<T>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<RoomType> read_rooms(const std::string& path);
std::vector<ReservationRecord> read_reservations(const std::string& path);
std::vector<BehaviorSeries> read_behavior(const std::string& path);

std::string rooms_csv(const std::vector<RoomType>& rooms);
std::string reservations_csv(const std::vector<ReservationRecord>& rows);
std::string behavior_csv(const std::vector<BehaviorSeries>& rows);

}  // namespace elastica
