#include "elastica/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "elastica/errors.hpp"
#include "elastica/market_sim.hpp"

namespace elastica {

FeatureContext::FeatureContext(FeatureSources sources, FeatureConfig config)
    : sources_(std::move(sources)), config_(config) {
    if (config_.window_days < 1) throw UsageError("features: window_days must be >= 1");
    if (config_.static_vocab < 1) throw UsageError("features: static_vocab must be >= 1");
    if (config_.embedding_dim < 1) throw UsageError("features: embedding_dim must be >= 1");
    if (sources_.rooms.empty()) throw DataError("features: no rooms");
    std::sort(sources_.rooms.begin(), sources_.rooms.end(),
              [](const RoomType& a, const RoomType& b) { return a.rid < b.rid; });
    index_rooms();
    build_long_term();
    build_group_days();
    build_icm();
}

const RoomType& FeatureContext::room(RoomId rid) const {
    auto it = room_index_.find(rid);
    if (it == room_index_.end()) throw LookupError("unknown rid " + std::to_string(rid));
    return sources_.rooms[it->second];
}

void FeatureContext::index_rooms() {
    std::set<int> districts;
    for (std::size_t i = 0; i < sources_.rooms.size(); ++i) {
        const auto& r = sources_.rooms[i];
        if (!room_index_.emplace(r.rid, i).second) throw DataError("features: duplicate rid " + std::to_string(r.rid));
        for (int f = 0; f < kStaticFeatureCount; ++f) {
            const int code = static_code(r.features, f);
            if (code < 0 || code >= config_.static_vocab) {
                throw DataError("features: rid " + std::to_string(r.rid) + " has " + kStaticFeatureNames[f] + " code " +
                                std::to_string(code) + " outside vocabulary of " +
                                std::to_string(config_.static_vocab));
            }
        }
        if (!sources_.assignment.group_of.count(r.rid)) {
            throw DataError("features: rid " + std::to_string(r.rid) + " has no group");
        }
        districts.insert(r.features.district);
    }
    const std::vector<int> ordered(districts.begin(), districts.end());

    // Quality differentials against the group mean.
    std::map<int, std::array<double, kQualityFeatures>> band_sum;
    std::map<int, int> band_count;
    auto bands = [](const RoomType& r) {
        return std::array<double, kQualityFeatures>{static_cast<double>(r.features.size_band),
                                                    static_cast<double>(r.features.decoration_band),
                                                    static_cast<double>(r.features.review_band)};
    };
    for (const auto& r : sources_.rooms) {
        const int g = sources_.assignment.group(r.rid);
        auto& s = band_sum[g];
        const auto b = bands(r);
        for (std::size_t i = 0; i < kQualityFeatures; ++i) s[i] += b[i];
        ++band_count[g];
    }
    const double p_ref = reference_price();
    for (const auto& r : sources_.rooms) {
        auto& h = history_[r.rid];
        const int g = sources_.assignment.group(r.rid);
        const auto b = bands(r);
        for (std::size_t i = 0; i < kQualityFeatures; ++i) {
            const double diff = std::round(b[i] - band_sum[g][i] / band_count[g]);
            h.quality[i] = static_cast<std::size_t>(std::clamp(diff, -2.0, 2.0) + 2.0);
        }
        h.region = static_cast<int>(std::lower_bound(ordered.begin(), ordered.end(), r.features.district) -
                                    ordered.begin());
    }
    for (const auto& b : sources_.behavior) {
        if (b.night >= sources_.history_end) continue;
        auto it = history_.find(b.rid);
        if (it == history_.end()) continue;
        it->second.days[b.night.days] = Day{b.clicks / config_.click_scale, b.searches / config_.search_scale,
                                            b.sale_price / p_ref, b.booking_price / p_ref, b.occupancy};
        it->second.sale_price.emplace_back(b.night.days, b.sale_price);
        if (b.competitor_price) it->second.competitor.emplace_back(b.night.days, *b.competitor_price);
    }
    for (auto& [_, h] : history_) {
        std::sort(h.sale_price.begin(), h.sale_price.end());
        std::sort(h.competitor.begin(), h.competitor.end());
    }
}

void FeatureContext::build_long_term() {
    std::map<int, std::set<HotelId>> region_hotels;
    for (const auto& r : sources_.rooms) region_hotels[history_.at(r.rid).region].insert(r.shid);
    std::map<RoomId, HotelId> hotel_of;
    for (const auto& r : sources_.rooms) hotel_of[r.rid] = r.shid;

    long_term_.assign(region_hotels.size(), {});
    for (const auto& [region, hotels] : region_hotels) {
        std::map<int, std::array<double, kLongTermVariables>> per_night;
        for (const auto& rec : sources_.reservations) {
            if (rec.night >= sources_.history_end) continue;
            auto it = hotel_of.find(rec.rid);
            if (it == hotel_of.end() || !hotels.count(it->second)) continue;
            per_night[rec.night.days][0] += rec.quantity;
        }
        for (const auto& b : sources_.behavior) {
            if (b.night >= sources_.history_end) continue;
            auto it = hotel_of.find(b.rid);
            if (it == hotel_of.end() || !hotels.count(it->second)) continue;
            per_night[b.night.days][1] += b.clicks;
            per_night[b.night.days][2] += b.searches;
        }
        auto& out = long_term_[static_cast<std::size_t>(region)];
        const Granularity order[3] = {Granularity::day, Granularity::week, Granularity::month};
        for (std::size_t g = 0; g < 3; ++g) {
            const std::size_t buckets = kLongTermBuckets[g];
            out.values[g].assign(buckets * kLongTermVariables, 0.0);
            for (std::size_t v = 0; v < kLongTermVariables; ++v) {
                std::vector<DatedValue> series;
                for (const auto& [day, vals] : per_night) series.push_back({Night{day}, vals[v]});
                const auto props = long_term_proportions(series, order[g]);
                for (std::size_t t = 0; t < buckets; ++t) out.values[g][t * kLongTermVariables + v] = props.values[t];
            }
        }
    }
}

void FeatureContext::build_group_days() {
    std::map<int, std::map<int, std::pair<Day, std::array<int, 2>>>> acc;  // sums plus (rows, booked rows)
    for (const auto& [rid, h] : history_) {
        const int g = sources_.assignment.group(rid);
        for (const auto& [day, d] : h.days) {
            auto& [sum, counts] = acc[g][day];
            sum[0] += d[0];
            sum[1] += d[1];
            sum[2] += d[2];
            sum[4] += d[4];
            ++counts[0];
            if (d[3] > 0.0) {
                sum[3] += d[3];
                ++counts[1];
            }
        }
    }
    for (const auto& [g, days] : acc) {
        for (const auto& [day, entry] : days) {
            const auto& [sum, counts] = entry;
            const double n = counts[0];
            group_days_[g][day] =
                Day{sum[0] / n, sum[1] / n, sum[2] / n, counts[1] > 0 ? sum[3] / counts[1] : 0.0, sum[4] / n};
        }
    }
}

void FeatureContext::build_icm() {
    const std::size_t dim = static_cast<std::size_t>(config_.embedding_dim);
    std::map<RoomId, std::pair<double, double>> booked;  // (sum p*q, sum q)
    for (const auto& rec : sources_.reservations) {
        if (rec.night >= sources_.history_end || rec.quantity <= 0.0) continue;
        auto& [pq, q] = booked[rec.rid];
        pq += rec.price * rec.quantity;
        q += rec.quantity;
    }
    for (auto& [rid, h] : history_) {
        h.icm.assign(2 * dim, 0.0);
        const int g = sources_.assignment.group(rid);
        auto eit = sources_.embeddings.find(g);
        if (eit == sources_.embeddings.end()) continue;
        const auto& [graph, table] = eit->second;
        const auto node = graph.find_room_node(rid);
        if (!node || table.vectors.size() <= *node) continue;
        if (static_cast<std::size_t>(table.dimension) != dim) {
            throw DataError("features: embeddings have dimension " + std::to_string(table.dimension) + ", expected " +
                            std::to_string(dim));
        }
        std::copy(table.vectors[*node].begin(), table.vectors[*node].end(), h.icm.begin());
        auto bit = booked.find(rid);
        const double price = bit != booked.end() ? bit->second.first / bit->second.second : reference_price();
        try {
            const auto pv = price_vector(table, graph, price);
            std::copy(pv.begin(), pv.end(), h.icm.begin() + static_cast<std::ptrdiff_t>(dim));
            h.embedding_missing = false;
        } catch (const LookupError&) {
            // group without price nodes keeps a zero price vector
        }
    }
}

std::vector<double> FeatureContext::window(const std::map<int, Day>& days, Night night, bool* missing) const {
    const int w = config_.window_days;
    const int end = std::min(night.days, sources_.history_end.days) - 1;
    const int start = end - w + 1;
    std::vector<double> out(static_cast<std::size_t>(w) * kBehaviorChannels, 0.0);
    bool any = false;
    for (auto it = days.lower_bound(start); it != days.end() && it->first <= end; ++it) {
        const auto row = static_cast<std::size_t>(it->first - start);
        std::copy(it->second.begin(), it->second.end(), out.begin() + static_cast<std::ptrdiff_t>(row * kBehaviorChannels));
        any = true;
    }
    if (missing) *missing = !any;
    return out;
}

RawExample FeatureContext::build(RoomId rid, Night night) const {
    const RoomType& r = room(rid);
    const auto& h = history_.at(rid);
    RawExample x;
    x.rid = rid;
    x.night = night;
    x.group = sources_.assignment.group(rid);
    for (int f = 0; f < kStaticFeatureCount; ++f) {
        x.static_codes[static_cast<std::size_t>(f)] = static_cast<std::size_t>(static_code(r.features, f));
    }
    x.dow = static_cast<std::size_t>(day_of_week(night));
    x.month = static_cast<std::size_t>(month_of_year(night) - 1);
    x.weekend = is_weekend(night) ? 1 : 0;
    x.long_term_query = {static_cast<std::size_t>(day_of_month(night) - 1), x.dow, x.month};
    x.icm = h.icm;
    x.embedding_missing = h.embedding_missing;
    x.quality = h.quality;
    x.region = h.region;
    x.long_term = long_term_.at(static_cast<std::size_t>(h.region)).values;
    x.room_window = window(h.days, night, &x.history_missing);
    auto git = group_days_.find(x.group);
    static const std::map<int, Day> no_days;
    x.group_window = window(git != group_days_.end() ? git->second : no_days, night, nullptr);

    // External competitiveness over the same window.
    const int end = std::min(night.days, sources_.history_end.days) - 1;
    const int start = end - config_.window_days + 1;
    auto window_stats = [&](const std::vector<std::pair<int, double>>& series) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        auto it = std::lower_bound(series.begin(), series.end(), std::pair<int, double>{start, -INFINITY});
        for (; it != series.end() && it->first <= end; ++it) {
            sum += it->second;
            sq += it->second * it->second;
            ++n;
        }
        const double mean = n ? sum / n : 0.0;
        const double var = n ? std::max(0.0, sq / n - mean * mean) : 0.0;
        return std::tuple<int, double, double>{n, mean, std::sqrt(var)};
    };
    const double p_ref = reference_price();
    const auto [nc, comp_mean, comp_sd] = window_stats(h.competitor);
    const auto [ns, own_mean, own_sd] = window_stats(h.sale_price);
    (void)comp_sd;
    x.ecm = {nc ? comp_mean / p_ref : 0.0, nc ? 0.0 : 1.0, ns ? own_mean / p_ref : 0.0, own_sd / p_ref,
             (nc && ns) ? own_mean / comp_mean : 1.0};
    return x;
}

}  // namespace elastica
