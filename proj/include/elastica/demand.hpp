#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>

#include <json.hpp>

namespace elastica {

// Exponential demand with a natural-growth term:
//   F(P) = q0 * exp(w * P) + b / P
// q0 is the benchmark sales, w < 0 the elasticity coefficient and b >= 0 the
// price-independent component.
class ExpDemandCurve {
public:
    ExpDemandCurve(double q0, double w, double b = 0.0);

    double q0() const noexcept { return q0_; }
    double w() const noexcept { return w_; }
    double b() const noexcept { return b_; }

    // Revenue-maximizing price of the elastic term, -1/w.
    double stationary_price() const noexcept { return -1.0 / w_; }

    friend bool operator==(const ExpDemandCurve&, const ExpDemandCurve&) = default;

private:
    double q0_;
    double w_;
    double b_;
};

// Constant-elasticity demand  O = o_bar * (P / p_bar)^(-beta)  with cost price p0.
class PowerDemandCurve {
public:
    PowerDemandCurve(double o_bar, double p_bar, double beta, double p0 = 0.0);

    double o_bar() const noexcept { return o_bar_; }
    double p_bar() const noexcept { return p_bar_; }
    double beta() const noexcept { return beta_; }
    double p0() const noexcept { return p0_; }

    friend bool operator==(const PowerDemandCurve&, const PowerDemandCurve&) = default;

private:
    double o_bar_;
    double p_bar_;
    double beta_;
    double p0_;
};

class PriceBounds {
public:
    PriceBounds(double p_min, double p_max);

    double p_min() const noexcept { return p_min_; }
    double p_max() const noexcept { return p_max_; }

    // Admissible elasticity interval [-1/p_min, -1/p_max].
    double w_lower() const noexcept { return -1.0 / p_min_; }
    double w_upper() const noexcept { return -1.0 / p_max_; }

    bool contains(double price) const noexcept { return price >= p_min_ && price <= p_max_; }

    friend bool operator==(const PriceBounds&, const PriceBounds&) = default;

private:
    double p_min_;
    double p_max_;
};

struct PricingResult {
    double optimal_price = 0.0;
    double expected_sales = 0.0;
    double expected_revenue = 0.0;
    bool clamped = false;
};

double exp_demand(const ExpDemandCurve& curve, double price);

// Expected revenue E = P * q0 * exp(w P) + b.
double exp_revenue(const ExpDemandCurve& curve, double price);

// dE/dP = (1 + P w) * q0 * exp(w P).
double exp_revenue_derivative(const ExpDemandCurve& curve, double price);

// Closed-form optimum -1/w, clamped into the bounds when supplied. E is
// increasing below -1/w and decreasing above it, so the nearest bound is the
// constrained maximizer.
PricingResult optimal_price(const ExpDemandCurve& curve,
                            const std::optional<PriceBounds>& bounds = std::nullopt);

double power_demand(const PowerDemandCurve& curve, double price);

// Grid search for argmax (P - p0) * O(P). Ties resolve to the lower price.
PricingResult power_optimal_price(const PowerDemandCurve& curve, std::span<const double> price_grid);

// `count` evenly spaced prices across the bounds, endpoints included.
std::vector<double> default_price_grid(const PriceBounds& bounds, std::size_t count = 200);

// F(P) / inventory. Not clamped to 1.
double occupancy(const ExpDemandCurve& curve, double price, double inventory);

using DemandCurve = std::variant<ExpDemandCurve, PowerDemandCurve>;

nlohmann::json to_json(const DemandCurve& curve);
DemandCurve curve_from_json(const nlohmann::json& j);

}  // namespace elastica
