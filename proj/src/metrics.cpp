#include "elastica/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "elastica/errors.hpp"

namespace elastica {

namespace {

void require_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw UsageError(std::string(what) + ": " + std::to_string(a) + " actual values but " + std::to_string(b) +
                         " predictions");
    }
}

}  // namespace

double mape(std::span<const double> actual, std::span<const double> predicted, std::size_t* excluded) {
    require_lengths(actual.size(), predicted.size(), "mape");
    double sum = 0.0;
    std::size_t n = 0, skipped = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) {
            ++skipped;
            continue;
        }
        sum += std::abs((actual[i] - predicted[i]) / actual[i]);
        ++n;
    }
    if (excluded) *excluded = skipped;
    if (n == 0) throw UndefinedMetricError("mape: every actual value is zero");
    return 100.0 * sum / static_cast<double>(n);
}

double wmape(std::span<const double> actual, std::span<const double> predicted,
             std::optional<std::span<const double>> weights) {
    require_lengths(actual.size(), predicted.size(), "wmape");
    if (weights) require_lengths(actual.size(), weights->size(), "wmape weights");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double w = weights ? (*weights)[i] : actual[i];
        num += w * std::abs(actual[i] - predicted[i]);
        den += w * std::abs(actual[i]);
    }
    if (!(den > 0.0)) throw UndefinedMetricError("wmape: zero denominator");
    return 100.0 * num / den;
}

double gmv(const std::map<RoomId, double>& prices, const std::map<RoomId, ExpDemandCurve>& curves) {
    double total = 0.0;
    for (const auto& [rid, price] : prices) {
        auto it = curves.find(rid);
        if (it == curves.end()) throw LookupError("gmv: no demand curve for rid " + std::to_string(rid));
        total += price * exp_demand(it->second, price);
    }
    return total;
}

BaselineFit constant_elasticity_baseline(std::span<const ReservationRecord> records, std::span<const RoomType> rooms,
                                         const PriceBounds& bounds, double k_benchmark) {
    if (!(k_benchmark > 0.0)) throw UsageError("baseline: k_benchmark must be positive");
    std::map<RoomId, const RoomType*> by_rid;
    for (const auto& r : rooms) by_rid[r.rid] = &r;

    std::map<RoomId, std::vector<const ReservationRecord*>> per_room;
    for (const auto& rec : records) {
        if (!by_rid.count(rec.rid)) throw LookupError("baseline: unknown rid " + std::to_string(rec.rid));
        per_room[rec.rid].push_back(&rec);
    }

    BaselineFit fit;
    double num = 0.0, den = 0.0;
    std::vector<RoomId> usable;
    for (const auto& [rid, room] : by_rid) {
        const double q0 = k_benchmark * room->avg_sales;
        auto it = per_room.find(rid);
        std::set<double> prices;
        std::vector<const ReservationRecord*> positive;
        if (it != per_room.end()) {
            for (const auto* rec : it->second) {
                if (rec->quantity > 0.0) {
                    positive.push_back(rec);
                    prices.insert(rec->price);
                }
            }
        }
        if (prices.size() < 2 || !(q0 > 0.0)) {
            fit.skipped.push_back(rid);
            continue;
        }
        for (const auto* rec : positive) {
            num += rec->price * (std::log(rec->quantity) - std::log(q0));
            den += rec->price * rec->price;
            ++fit.samples;
        }
        usable.push_back(rid);
    }
    if (usable.empty()) throw DataError("baseline: no rid has two distinct booked prices");
    fit.raw_w = num / den;
    fit.w = std::clamp(fit.raw_w, bounds.w_lower(), bounds.w_upper());
    for (RoomId rid : usable) fit.curves.emplace(rid, ExpDemandCurve(k_benchmark * by_rid[rid]->avg_sales, fit.w, 0.0));
    return fit;
}

nlohmann::json EvalReport::to_json() const {
    return {{"mape", mape},   {"wmape", wmape},       {"gmv", gmv},
            {"n", n},         {"excluded", excluded}, {"baseline_mape", baseline_mape},
            {"baseline_wmape", baseline_wmape}};
}

std::string EvalReport::csv_header() { return "mape,wmape,gmv,n,excluded,baseline_mape,baseline_wmape"; }

std::string EvalReport::csv_row() const {
    return format_double(mape) + "," + format_double(wmape) + "," + format_double(gmv) + "," + std::to_string(n) +
           "," + std::to_string(excluded) + "," + format_double(baseline_mape) + "," + format_double(baseline_wmape);
}

}  // namespace elastica
