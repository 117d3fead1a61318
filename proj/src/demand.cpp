#include "elastica/demand.hpp"

#include <cmath>
#include <vector>

#include "elastica/errors.hpp"

namespace elastica {

namespace {

void require_positive_price(double price, const char* op) {
    if (!(price > 0.0) || !std::isfinite(price)) {
        throw DomainError(std::string(op) + ": price must be positive and finite, got " +
                          format_double(price));
    }
}

}  // namespace

ExpDemandCurve::ExpDemandCurve(double q0, double w, double b) : q0_(q0), w_(w), b_(b) {
    if (!(q0 > 0.0) || !std::isfinite(q0)) {
        throw DomainError("ExpDemandCurve: q0 must be positive, got " + format_double(q0));
    }
    if (!(w < 0.0) || !std::isfinite(w)) {
        throw DomainError("ExpDemandCurve: w must be strictly negative, got " + format_double(w));
    }
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw DomainError("ExpDemandCurve: b must be non-negative, got " + format_double(b));
    }
}

PowerDemandCurve::PowerDemandCurve(double o_bar, double p_bar, double beta, double p0)
    : o_bar_(o_bar), p_bar_(p_bar), beta_(beta), p0_(p0) {
    if (!(o_bar > 0.0)) throw DomainError("PowerDemandCurve: o_bar must be positive");
    if (!(p_bar > 0.0)) throw DomainError("PowerDemandCurve: p_bar must be positive");
    if (!(beta >= 0.0)) throw DomainError("PowerDemandCurve: beta must be non-negative");
    if (!(p0 >= 0.0)) throw DomainError("PowerDemandCurve: p0 must be non-negative");
}

PriceBounds::PriceBounds(double p_min, double p_max) : p_min_(p_min), p_max_(p_max) {
    if (!(p_min > 0.0) || !std::isfinite(p_min)) {
        throw DomainError("PriceBounds: p_min must be positive, got " + format_double(p_min));
    }
    if (!(p_max > p_min) || !std::isfinite(p_max)) {
        throw DomainError("PriceBounds: p_max must exceed p_min, got [" + format_double(p_min) +
                          ", " + format_double(p_max) + "]");
    }
}

double exp_demand(const ExpDemandCurve& curve, double price) {
    require_positive_price(price, "exp_demand");
    return curve.q0() * std::exp(curve.w() * price) + curve.b() / price;
}

double exp_revenue(const ExpDemandCurve& curve, double price) {
    require_positive_price(price, "exp_revenue");
    return price * curve.q0() * std::exp(curve.w() * price) + curve.b();
}

double exp_revenue_derivative(const ExpDemandCurve& curve, double price) {
    require_positive_price(price, "exp_revenue_derivative");
    return (1.0 + price * curve.w()) * curve.q0() * std::exp(curve.w() * price);
}

PricingResult optimal_price(const ExpDemandCurve& curve, const std::optional<PriceBounds>& bounds) {
    PricingResult out;
    double p = curve.stationary_price();
    if (bounds) {
        if (p < bounds->p_min()) {
            p = bounds->p_min();
            out.clamped = true;
        } else if (p > bounds->p_max()) {
            p = bounds->p_max();
            out.clamped = true;
        }
    }
    out.optimal_price = p;
    out.expected_sales = exp_demand(curve, p);
    out.expected_revenue = p * out.expected_sales;
    return out;
}

double power_demand(const PowerDemandCurve& curve, double price) {
    require_positive_price(price, "power_demand");
    if (price == curve.p_bar()) return curve.o_bar();
    return curve.o_bar() * std::pow(price / curve.p_bar(), -curve.beta());
}

PricingResult power_optimal_price(const PowerDemandCurve& curve, std::span<const double> price_grid) {
    if (price_grid.empty()) throw UsageError("power_optimal_price: empty price grid");
    PricingResult best;
    bool have = false;
    for (double p : price_grid) {
        const double sales = power_demand(curve, p);
        const double revenue = (p - curve.p0()) * sales;
        // Strict improvement keeps the earliest (lowest) price on ties.
        if (!have || revenue > best.expected_revenue) {
            best.optimal_price = p;
            best.expected_sales = sales;
            best.expected_revenue = revenue;
            have = true;
        }
    }
    return best;
}

std::vector<double> default_price_grid(const PriceBounds& bounds, std::size_t count) {
    if (count < 2) throw UsageError("default_price_grid: need at least 2 points");
    std::vector<double> grid(count);
    const double step = (bounds.p_max() - bounds.p_min()) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) grid[i] = bounds.p_min() + step * static_cast<double>(i);
    grid.back() = bounds.p_max();
    return grid;
}

double occupancy(const ExpDemandCurve& curve, double price, double inventory) {
    if (!(inventory > 0.0)) {
        throw DomainError("occupancy: inventory must be positive, got " + format_double(inventory));
    }
    return exp_demand(curve, price) / inventory;
}

nlohmann::json to_json(const DemandCurve& curve) {
    return std::visit(
        [](const auto& c) -> nlohmann::json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ExpDemandCurve>) {
                return {{"kind", "exp"}, {"q0", c.q0()}, {"w", c.w()}, {"b", c.b()}};
            } else {
                return {{"kind", "power"},
                        {"o_bar", c.o_bar()},
                        {"p_bar", c.p_bar()},
                        {"beta", c.beta()},
                        {"p0", c.p0()}};
            }
        },
        curve);
}

DemandCurve curve_from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "exp") {
            return ExpDemandCurve(j.at("q0").get<double>(), j.at("w").get<double>(),
                                  j.value("b", 0.0));
        }
        if (kind == "power") {
            return PowerDemandCurve(j.at("o_bar").get<double>(), j.at("p_bar").get<double>(),
                                    j.at("beta").get<double>(), j.value("p0", 0.0));
        }
        throw DataError("curve: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("curve: malformed JSON: ") + e.what());
    }
}

}  // namespace elastica
