#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "elastica/calendar.hpp"
#include "elastica/demand.hpp"
#include "elastica/graph_embed.hpp"
#include "elastica/grouping.hpp"
#include "elastica/records.hpp"

namespace elastica {

inline constexpr std::size_t kBehaviorChannels = 5;  // clicks, searches, sale price, booking price, occupancy
inline constexpr std::size_t kEcmFeatures = 5;
inline constexpr std::size_t kLongTermVariables = 3;  // sales, clicks, searches
inline constexpr std::size_t kQualityFeatures = 3;    // size, decoration, review bands
inline constexpr std::size_t kQualityLevels = 5;      // differential clipped to [-2, 2]
inline constexpr std::array<std::size_t, 3> kLongTermBuckets = {31, 7, 12};  // day of month, week, month

struct FeatureConfig {
    int window_days = 30;
    int static_vocab = 64;
    double click_scale = 50.0;
    double search_scale = 100.0;
    // Dimension of graph embeddings; rooms without one get zeros of this size.
    int embedding_dim = 32;
};

// Model inputs for one (rid, night) before any learned transformation.
struct RawExample {
    RoomId rid = 0;
    Night night;
    int group = 0;
    std::array<std::size_t, kStaticFeatureCount> static_codes{};
    std::size_t dow = 0;
    std::size_t month = 0;  // 0-based
    std::size_t weekend = 0;
    std::array<std::size_t, 3> long_term_query{};  // day of month (0-based), day of week, month
    std::vector<double> icm;                         // room vector then price vector
    std::array<std::size_t, kQualityFeatures> quality{};
    std::array<double, kEcmFeatures> ecm{};
    std::vector<double> room_window;   // window_days x kBehaviorChannels, oldest first
    std::vector<double> group_window;  // same layout, group aggregate
    int region = 0;
    // Proportion inputs of the room's region, [T x kLongTermVariables] per granularity.
    std::array<std::vector<double>, 3> long_term;
    bool history_missing = false;      // no behavior in the room's window
    bool embedding_missing = false;
};

struct LongTermInputs {
    std::array<std::vector<double>, 3> values;
};

struct FeatureSources {
    std::vector<RoomType> rooms;
    std::vector<ReservationRecord> reservations;
    std::vector<BehaviorSeries> behavior;
    GroupAssignment assignment;
    std::map<int, GroupEmbedding> embeddings;
    PriceBounds bounds{50.0, 300.0};
    // Only records strictly before this night are read.
    Night history_end;
};

// Precomputes everything per room, group and region so examples for any
// night can be assembled cheaply. History is cut at history_end, so features
// for held-out nights never see held-out outcomes.
class FeatureContext {
public:
    FeatureContext(FeatureSources sources, FeatureConfig config = {});

    RawExample build(RoomId rid, Night night) const;

    const FeatureConfig& config() const { return config_; }
    const RoomType& room(RoomId rid) const;  // throws LookupError
    const std::vector<RoomType>& rooms() const { return sources_.rooms; }
    const GroupAssignment& assignment() const { return sources_.assignment; }
    const PriceBounds& bounds() const { return sources_.bounds; }
    Night history_end() const { return sources_.history_end; }
    double reference_price() const { return 0.5 * (sources_.bounds.p_min() + sources_.bounds.p_max()); }
    std::size_t icm_dim() const { return 2 * static_cast<std::size_t>(config_.embedding_dim); }
    const LongTermInputs& long_term(int region) const { return long_term_.at(static_cast<std::size_t>(region)); }
    std::size_t region_count() const { return long_term_.size(); }

private:
    using Day = std::array<double, kBehaviorChannels>;
    struct RoomHistory {
        std::map<int, Day> days;  // keyed by Night::days
        std::vector<std::pair<int, double>> competitor;
        std::vector<std::pair<int, double>> sale_price;
        std::vector<double> icm;
        bool embedding_missing = true;
        std::array<std::size_t, kQualityFeatures> quality{};
        int region = 0;
    };

    void index_rooms();
    void build_long_term();
    void build_group_days();
    void build_icm();
    std::vector<double> window(const std::map<int, Day>& days, Night night, bool* missing) const;

    FeatureSources sources_;
    FeatureConfig config_;
    std::map<RoomId, std::size_t> room_index_;
    std::map<RoomId, RoomHistory> history_;
    std::map<int, std::map<int, Day>> group_days_;
    std::vector<LongTermInputs> long_term_;
};

}  // namespace elastica
