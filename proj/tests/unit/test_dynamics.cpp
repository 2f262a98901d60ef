#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "garnn/dynamics.hpp"

using namespace garnn;
using Eigen::MatrixXd;

namespace {

GarnnSpec poisson_spec(int p, int nodes) {
    return GarnnSpec{Family::poisson(), default_link(Family::poisson()), NetSpec{p, nodes, Activation::Tanh}, 1, 0};
}

}  // namespace

TEST(FittedValues, InterceptOnly) {
    const auto spec = poisson_spec(2, 0);
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = std::log(3.0);
    const auto mu = fitted_values(spec, make_frame({1, 4, 2, 5, 3}, MatrixXd::Ones(5, 1)), theta);
    ASSERT_EQ(mu.size(), 3u);
    for (double v : mu) EXPECT_NEAR(v, 3.0, 1e-14);
}

TEST(FittedValues, IdentityLinkNetwork) {
    GarnnSpec spec{Family::normal(), default_link(Family::normal()), NetSpec{1, 1, Activation::Tanh}, 1, 0};
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 1.0;
    theta.weights.omega(0, 0) = 1.0;
    theta.weights.rho(0) = 1.0;
    const auto mu = fitted_values(spec, make_frame({1, 2, 3}, MatrixXd::Ones(3, 1)), theta);
    ASSERT_EQ(mu.size(), 2u);
    EXPECT_NEAR(mu[0], 1.0 + std::tanh(-1.0), 1e-15);
    EXPECT_NEAR(mu[1], 1.0, 1e-15);
}

TEST(Forecast, InterceptOnlyIsConstant) {
    const auto spec = poisson_spec(1, 0);
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 0.7;
    const auto r = forecast(spec, make_frame({1, 0, 3, 2}, MatrixXd::Ones(4, 1)), theta, MatrixXd::Ones(6, 1), 6);
    ASSERT_EQ(r.mu_hat.size(), 6u);
    for (double v : r.mu_hat) EXPECT_EQ(v, r.mu_hat.front());
    EXPECT_EQ(r.origin, 4u);
}

TEST(Forecast, HandUnrolledRecursion) {
    const auto spec = poisson_spec(1, 1);
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 0.4;
    theta.weights.omega(0, 0) = 0.9;
    theta.weights.rho(0) = -0.6;
    const std::vector<double> y{2, 5, 1, 3};
    const SeriesFrame frame = make_frame(y, MatrixXd::Ones(4, 1));
    const double mean = 2.75;
    const double sd = std::sqrt(((2 - mean) * (2 - mean) + (5 - mean) * (5 - mean) + (1 - mean) * (1 - mean) +
                                 (3 - mean) * (3 - mean)) / 3.0);
    const auto step = [&](double prev) { return std::exp(0.4 - 0.6 * std::tanh(0.9 * (prev - mean) / sd)); };
    const double m1 = step(3.0), m2 = step(m1), m3 = step(m2);
    const auto r = forecast(spec, frame, theta, MatrixXd::Ones(3, 1), 3);
    EXPECT_NEAR(r.mu_hat[0], m1, 1e-12);
    EXPECT_NEAR(r.mu_hat[1], m2, 1e-12);
    EXPECT_NEAR(r.mu_hat[2], m3, 1e-12);
}

TEST(Forecast, MissingFutureCovariates) {
    const auto spec = poisson_spec(1, 0);
    const auto frame = make_frame({1, 2, 3}, MatrixXd::Ones(3, 1));
    EXPECT_THROW(forecast(spec, frame, ParamVector::zeros(spec), MatrixXd::Ones(2, 1), 3), InvalidInput);
    EXPECT_THROW(forecast(spec, frame, ParamVector::zeros(spec), MatrixXd::Ones(3, 1), 0), InvalidInput);
}

TEST(Simulate, DeterministicForFixedSeed) {
    const auto spec = poisson_spec(2, 2);
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 1.0;
    theta.weights.omega << 0.5, -0.2, 0.3, 0.8;
    theta.weights.rho << 0.4, -0.3;
    SimulationOptions opts;
    opts.seed = 5;
    const auto a = simulate(spec, theta, 1.0, 300, opts);
    const auto b = simulate(spec, theta, 1.0, 300, opts);
    EXPECT_EQ(a.frame.y, b.frame.y);
    EXPECT_EQ(a.mu, b.mu);
    opts.seed = 6;
    EXPECT_NE(simulate(spec, theta, 1.0, 300, opts).frame.y, a.frame.y);
    EXPECT_EQ(a.frame.size(), 300u);
    EXPECT_EQ(a.mu.size(), 300u);
}

TEST(Simulate, DefaultScalingFromFirstDesignRow) {
    const auto spec = poisson_spec(1, 1);
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = std::log(4.0);
    const auto r = simulate(spec, theta, 1.0, 50);
    EXPECT_NEAR(r.input_scaling.mean, 4.0, 1e-12);
    EXPECT_NEAR(r.input_scaling.sd, 2.0, 1e-12);
}

TEST(Simulate, LeavingMeanDomainIsReported) {
    GarnnSpec spec{Family::gamma(), default_link(Family::gamma()), NetSpec{1, 1, Activation::Tanh}, 1, 0};
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 0.1;
    theta.weights.omega(0, 0) = 5.0;
    theta.weights.rho(0) = 3.0;
    EXPECT_THROW(simulate(spec, theta, 0.5, 500), SimulationError);
}

TEST(Stationarity, WhiteNoisePassesAndTrendFails) {
    std::mt19937_64 rng(97);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> series(4000);
    for (double& v : series) v = noise(rng);
    const auto thresholds = calibrate_stationarity_thresholds(series.size(), 8);
    EXPECT_TRUE(stationarity_check(series, 8, thresholds).consistent);
    for (std::size_t t = 0; t < series.size(); ++t) series[t] += 2.0 * t / series.size();
    EXPECT_FALSE(stationarity_check(series, 8, thresholds).consistent);
}

TEST(Stationarity, GrowingVarianceFails) {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> series(4000);
    for (std::size_t t = 0; t < series.size(); ++t) series[t] = (1.0 + 2.0 * t / series.size()) * noise(rng);
    const auto r = stationarity_check(series, 8);
    EXPECT_FALSE(r.consistent);
    EXPECT_GT(r.variance_drift_z, r.thresholds.variance_drift_z);
}

TEST(Stationarity, ConvergingProcessPasses) {
    GarnnSpec spec{Family::normal(), default_link(Family::normal()), NetSpec{1, 2, Activation::Tanh}, 1, 0};
    ParamVector theta = ParamVector::zeros(spec);
    theta.beta(0) = 1.0;
    theta.weights.omega << 1.0, -0.5;
    theta.weights.rho << 0.8, 0.5;
    SimulationOptions opts;
    opts.seed = 3;
    const auto sim = simulate(spec, theta, 1.0, 5000, opts);
    EXPECT_TRUE(stationarity_check(sim.frame.y, 10).consistent);
}

TEST(Stationarity, MeanDriftShrinksWithWindowLength) {
    std::mt19937_64 rng(103);
    std::normal_distribution<double> noise(0.0, 1.0);
    double previous = 1e300;
    for (std::size_t len : {400u, 1600u, 6400u}) {
        double total = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> s(len);
            for (double& v : s) v = noise(rng);
            total += detail::window_statistics(s, 4).mean_drift;
        }
        EXPECT_LT(total, previous);
        previous = total;
    }
}

TEST(Stationarity, InputValidation) {
    std::vector<double> s(30, 1.0);
    EXPECT_THROW(stationarity_check(s, 1), InvalidInput);
    EXPECT_THROW(stationarity_check(s, 4), InvalidInput);
}
