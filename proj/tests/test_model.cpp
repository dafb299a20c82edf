#include <gtest/gtest.h>

#include <cmath>

#include "maxdeficit/model.hpp"
#include "oracles.hpp"

using namespace maxdeficit;

namespace {
const ExponentialLine kLine1{10.0, 1.0, 12.0};
const ExponentialLine kLine2{1.0, 10.0, 15.0};
const ExponentialLine kLine3{0.1, 100.0, 20.0};
}  // namespace

TEST(Model, AdjustmentCoefficientTableOne) {
    EXPECT_NEAR(adjustment_coefficient(kLine1), 0.16667, 1e-5);
    EXPECT_NEAR(adjustment_coefficient(kLine2), 0.03333, 1e-5);
    EXPECT_NEAR(adjustment_coefficient(kLine3), 0.00500, 1e-5);
}

TEST(Model, RuinConstantsTableOne) {
    const auto k1 = ruin_constants(kLine1);
    const auto k2 = ruin_constants(kLine2);
    const auto k3 = ruin_constants(kLine3);
    EXPECT_NEAR(k1.a, 0.8333, 5e-5);
    EXPECT_NEAR(k1.b, 0.1667, 5e-5);
    EXPECT_NEAR(k2.a, 0.6667, 5e-5);
    EXPECT_NEAR(k2.b, 0.0333, 5e-5);
    EXPECT_NEAR(k3.a, 0.5000, 5e-5);
    EXPECT_NEAR(k3.b, 0.0050, 5e-5);
}

TEST(Model, UltimateRuin) {
    EXPECT_DOUBLE_EQ(ultimate_ruin(kLine1, 0.0), ruin_constants(kLine1).a);
    EXPECT_NEAR(ultimate_ruin(kLine1, 2.78), 0.5243, 1e-3);
    EXPECT_NEAR(ultimate_ruin(kLine1, 2.78), 0.524319058271971692, 1e-14);
    EXPECT_EQ(ultimate_ruin(kLine2, -1.0), 1.0);
}

TEST(Model, SafetyLoadingRequired) {
    EXPECT_THROW(adjustment_coefficient(ExponentialLine{10.0, 1.0, 10.0}), DomainError);
    EXPECT_THROW(ruin_constants(ExponentialLine{10.0, 1.0, 9.0}), DomainError);
    EXPECT_THROW(ruin_constants(ExponentialLine{0.0, 1.0, 9.0}), DomainError);
    EXPECT_THROW(ruin_constants(ExponentialLine{1.0, -1.0, 9.0}), DomainError);
}

TEST(Model, Factories) {
    const auto l = ExponentialLine::from_constants(0.9, 0.05);
    EXPECT_NEAR(ruin_constants(l).a, 0.9, 1e-15);
    EXPECT_NEAR(ruin_constants(l).b, 0.05, 1e-15);
    const auto m = ExponentialLine::from_adjustment(1.0, 1.0 / 6.0, 12.0);
    EXPECT_NEAR(m.lambda, 10.0, 1e-12);
    EXPECT_THROW(ExponentialLine::from_adjustment(1.0, 1.0), DomainError);
}

TEST(Model, PropertyAEqualsOneMinusMuR) {
    oracle::Gen gen(1);
    for (int i = 0; i < 1000; ++i) {
        const double mu = gen.log_uniform(0.01, 100.0);
        const double lambda = gen.log_uniform(0.01, 100.0);
        const double c = lambda * mu * gen.uniform(1.001, 5.0);
        const ExponentialLine l{lambda, mu, c};
        const auto k = ruin_constants(l);
        EXPECT_NEAR(k.a, 1.0 - mu * k.b, 1e-12);
        EXPECT_GT(k.a, 0.0);
        EXPECT_LT(k.a, 1.0);
    }
}

TEST(Model, PropertyMonotoneOrdering) {
    oracle::Gen gen(2);
    for (int i = 0; i < 200; ++i) {
        const double mu = gen.uniform(0.5, 5.0);
        const double lambda = gen.uniform(0.5, 5.0);
        const double c = lambda * mu * gen.uniform(1.2, 3.0);
        const ExponentialLine base{lambda, mu, c};
        const double u = gen.uniform(0.0, 30.0);
        const double p = ultimate_ruin(base, u);
        EXPECT_LE(ultimate_ruin(base, u + 1.0), p);
        EXPECT_LE(ultimate_ruin(ExponentialLine{lambda, mu, c * 1.1}, u), p);
        EXPECT_GE(ultimate_ruin(ExponentialLine{lambda * 1.01, mu, c}, u), p);
        EXPECT_GE(ultimate_ruin(ExponentialLine{lambda, mu * 1.01, c}, u), p);
    }
}
