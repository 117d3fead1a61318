#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "elastica/demand.hpp"
#include "elastica/errors.hpp"

using namespace elastica;

TEST(ExpDemand, ReferenceValue) {
    const ExpDemandCurve c(10.0, -0.01, 200.0);
    // 10 e^-1 + 2
    EXPECT_NEAR(exp_demand(c, 100.0), 5.678794411714423, 1e-12);
}

TEST(ExpDemand, DecaysToZeroWithoutNaturalGrowth) {
    const ExpDemandCurve c(10.0, -0.01);
    double prev = exp_demand(c, 1.0);
    for (double p = 10.0; p < 5000.0; p *= 1.5) {
        const double v = exp_demand(c, p);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-15);
}

TEST(ExpDemand, ValueAtReciprocalElasticity) {
    const ExpDemandCurve c(7.5, -0.02);
    EXPECT_NEAR(exp_demand(c, 50.0), 7.5 / std::exp(1.0), 1e-12);
}

TEST(ExpDemand, RejectsNonPositivePrice) {
    const ExpDemandCurve c(10.0, -0.01);
    EXPECT_THROW(exp_demand(c, 0.0), DomainError);
    EXPECT_THROW(exp_demand(c, -3.0), DomainError);
    EXPECT_THROW(exp_revenue(c, 0.0), DomainError);
    EXPECT_THROW(exp_revenue_derivative(c, -1.0), DomainError);
}

TEST(ExpDemand, ConstructorEnforcesInvariants) {
    EXPECT_THROW(ExpDemandCurve(0.0, -0.01), DomainError);
    EXPECT_THROW(ExpDemandCurve(1.0, 0.0), DomainError);
    EXPECT_THROW(ExpDemandCurve(1.0, 0.01), DomainError);
    EXPECT_THROW(ExpDemandCurve(1.0, -0.01, -1.0), DomainError);
}

TEST(ExpRevenue, ReferenceValue) {
    const ExpDemandCurve c(10.0, -0.01, 200.0);
    EXPECT_NEAR(exp_revenue(c, 100.0), 1000.0 / std::exp(1.0) + 200.0, 1e-10);
}

TEST(ExpRevenue, VanishesNearZeroPriceWithoutNaturalGrowth) {
    const ExpDemandCurve c(10.0, -0.01);
    EXPECT_LT(exp_revenue(c, 1e-9), 1e-7);
}

TEST(ExpRevenue, DerivativeReferenceValues) {
    const ExpDemandCurve c(10.0, -0.01);
    EXPECT_EQ(exp_revenue_derivative(c, 100.0), 0.0);
    EXPECT_GT(exp_revenue_derivative(c, 60.0), 0.0);
    EXPECT_NEAR(exp_revenue_derivative(c, 50.0), 0.5 * 10.0 * std::exp(-0.5), 1e-12);
}

TEST(ExpRevenue, StationaryPointIsGlobalMaximum) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> w_dist(-0.05, -0.001);
    for (int i = 0; i < 50; ++i) {
        const ExpDemandCurve c(3.0, w_dist(rng), 40.0);
        const double best = exp_revenue(c, -1.0 / c.w());
        for (double p = 1.0; p < 3000.0; p += 0.7) EXPECT_LE(exp_revenue(c, p), best + 1e-9);
    }
}

TEST(OptimalPrice, Unbounded) {
    const auto r = optimal_price(ExpDemandCurve(10.0, -0.01));
    EXPECT_DOUBLE_EQ(r.optimal_price, 100.0);
    EXPECT_FALSE(r.clamped);
    EXPECT_DOUBLE_EQ(r.expected_revenue, r.optimal_price * r.expected_sales);
}

TEST(OptimalPrice, ClampsToUpperBoundAndMatchesGrid) {
    const ExpDemandCurve c(10.0, -0.004);
    const PriceBounds bounds(50.0, 200.0);
    const auto r = optimal_price(c, bounds);
    EXPECT_DOUBLE_EQ(r.optimal_price, 200.0);
    EXPECT_TRUE(r.clamped);
    double best_p = 50.0, best = -1.0;
    for (int i = 0; i <= 15000; ++i) {
        const double p = 50.0 + 0.01 * i;
        if (exp_revenue(c, p) > best) {
            best = exp_revenue(c, p);
            best_p = p;
        }
    }
    EXPECT_NEAR(best_p, 200.0, 0.01);
}

TEST(OptimalPrice, InteriorStationaryPoint) {
    const auto r = optimal_price(ExpDemandCurve(10.0, -1.0 / 150.0), PriceBounds(100.0, 200.0));
    EXPECT_NEAR(r.optimal_price, 150.0, 1e-12);
    EXPECT_FALSE(r.clamped);
}

TEST(OptimalPrice, BoundedAlwaysInsideAndClampFlagExact) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> w_dist(-0.1, -0.0005);
    const PriceBounds bounds(60.0, 240.0);
    for (int i = 0; i < 1000; ++i) {
        const ExpDemandCurve c(5.0, w_dist(rng));
        const auto r = optimal_price(c, bounds);
        EXPECT_GE(r.optimal_price, bounds.p_min());
        EXPECT_LE(r.optimal_price, bounds.p_max());
        EXPECT_EQ(r.clamped, !bounds.contains(-1.0 / c.w()));
    }
}

TEST(PriceBounds, ElasticityInterval) {
    const PriceBounds b(50.0, 300.0);
    EXPECT_DOUBLE_EQ(b.w_lower(), -1.0 / 50.0);
    EXPECT_DOUBLE_EQ(b.w_upper(), -1.0 / 300.0);
    EXPECT_THROW(PriceBounds(0.0, 10.0), DomainError);
    EXPECT_THROW(PriceBounds(10.0, 10.0), DomainError);
}

TEST(PowerDemand, ReferenceValues) {
    EXPECT_DOUBLE_EQ(power_demand(PowerDemandCurve(100.0, 100.0, 1.0), 200.0), 50.0);
    EXPECT_NEAR(power_demand(PowerDemandCurve(100.0, 100.0, 2.0), 150.0), 44.44444444444444, 1e-12);
    EXPECT_THROW(power_demand(PowerDemandCurve(100.0, 100.0, 2.0), 0.0), DomainError);
}

TEST(PowerDemand, BenchmarkPriceReturnsBenchmarkOccupancyExactly) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 500.0);
    for (int i = 0; i < 200; ++i) {
        const PowerDemandCurve c(u(rng), u(rng), u(rng) / 50.0);
        EXPECT_EQ(power_demand(c, c.p_bar()), c.o_bar());
    }
}

TEST(PowerOptimalPrice, GridCases) {
    const std::vector<double> grid{50.0, 100.0, 150.0, 200.0};
    EXPECT_DOUBLE_EQ(power_optimal_price(PowerDemandCurve(100.0, 100.0, 2.0), grid).optimal_price, 50.0);
    EXPECT_DOUBLE_EQ(power_optimal_price(PowerDemandCurve(100.0, 100.0, 0.0), grid).optimal_price, 200.0);
    // Unit elasticity with no cost: every revenue equals o_bar * p_bar, the tie goes to the lowest price.
    EXPECT_DOUBLE_EQ(power_optimal_price(PowerDemandCurve(100.0, 100.0, 1.0), grid).optimal_price, 50.0);
    EXPECT_THROW(power_optimal_price(PowerDemandCurve(100.0, 100.0, 1.0), std::vector<double>{}), UsageError);
}

TEST(PowerOptimalPrice, RevenueUsesCostPrice) {
    const std::vector<double> grid{50.0, 100.0, 150.0, 200.0};
    const PowerDemandCurve c(100.0, 100.0, 2.0, 40.0);
    const auto r = power_optimal_price(c, grid);
    double best = -1e300, best_p = 0.0;
    for (double p : grid) {
        const double e = (p - 40.0) * power_demand(c, p);
        if (e > best) {
            best = e;
            best_p = p;
        }
    }
    EXPECT_DOUBLE_EQ(r.optimal_price, best_p);
    EXPECT_DOUBLE_EQ(r.expected_revenue, best);
}

TEST(DefaultGrid, EndpointsAndCount) {
    const auto g = default_price_grid(PriceBounds(50.0, 300.0));
    ASSERT_EQ(g.size(), 200u);
    EXPECT_DOUBLE_EQ(g.front(), 50.0);
    EXPECT_DOUBLE_EQ(g.back(), 300.0);
}

TEST(Occupancy, Values) {
    const ExpDemandCurve c(10.0, -0.01, 200.0);
    EXPECT_NEAR(occupancy(c, 100.0, 10.0), 0.5678794411714423, 1e-12);
    EXPECT_THROW(occupancy(c, 100.0, 0.0), DomainError);
    const ExpDemandCurve d(4.0, -0.01);
    EXPECT_NEAR(occupancy(d, 1e-9, 4.0), 1.0, 1e-9);
}

TEST(CurveJson, RoundTripIsBitExact) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.001, 1.0);
    for (int i = 0; i < 100; ++i) {
        const DemandCurve exp_curve = ExpDemandCurve(u(rng) * 30.0, -u(rng) / 10.0, u(rng) * 100.0);
        const DemandCurve power_curve = PowerDemandCurve(u(rng) * 30.0, u(rng) * 300.0, u(rng) * 3.0, u(rng));
        EXPECT_EQ(curve_from_json(nlohmann::json::parse(to_json(exp_curve).dump())), exp_curve);
        EXPECT_EQ(curve_from_json(nlohmann::json::parse(to_json(power_curve).dump())), power_curve);
    }
    EXPECT_EQ(to_json(DemandCurve(ExpDemandCurve(1.0, -0.1))).at("kind"), "exp");
}

// Property: strict monotonic decrease for random curves and price pairs.
TEST(ExpDemandProperty, StrictlyDecreasing) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const ExpDemandCurve c(0.1 + 50.0 * u(rng), -(1e-4 + 0.05 * u(rng)), 500.0 * u(rng));
        const double p1 = 1.0 + 400.0 * u(rng);
        const double p2 = p1 + 0.01 + 100.0 * u(rng);
        EXPECT_LT(exp_demand(c, p2), exp_demand(c, p1));
    }
}
