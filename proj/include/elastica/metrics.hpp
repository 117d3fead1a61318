#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastica/demand.hpp"
#include "elastica/records.hpp"

namespace elastica {

// Pooled MAPE in percent. Entries with a zero actual are skipped; their count
// is written to `excluded` when given.
double mape(std::span<const double> actual, std::span<const double> predicted, std::size_t* excluded = nullptr);

// 100 * sum w|a - p| / sum w|a|. Weights default to the actual values.
double wmape(std::span<const double> actual, std::span<const double> predicted,
             std::optional<std::span<const double>> weights = std::nullopt);

// Sum over rids of price * F(price).
double gmv(const std::map<RoomId, double>& prices, const std::map<RoomId, ExpDemandCurve>& curves);

struct BaselineFit {
    double w = 0.0;  // shared across rids, clamped into the price bounds' interval
    double raw_w = 0.0;
    std::map<RoomId, ExpDemandCurve> curves;
    std::vector<RoomId> skipped;  // fewer than two distinct prices, or no positive sales
    std::size_t samples = 0;
};

// Least squares on log q = log(K Q_avg) + W P with b = 0: one W for every
// rid, per-rid Q0 = K * Q_avg. Zero-quantity records carry no log and are
// left out.
BaselineFit constant_elasticity_baseline(std::span<const ReservationRecord> records, std::span<const RoomType> rooms,
                                         const PriceBounds& bounds, double k_benchmark);

struct EvalReport {
    double mape = 0.0;
    double wmape = 0.0;
    double gmv = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;  // zero actuals left out of MAPE
    double baseline_mape = 0.0;
    double baseline_wmape = 0.0;

    nlohmann::json to_json() const;
    static std::string csv_header();
    std::string csv_row() const;
};

}  // namespace elastica
