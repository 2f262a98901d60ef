#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "garnn/optimizer.hpp"

using namespace garnn;
using Eigen::VectorXd;

namespace {

double rosenbrock(const VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
}

VectorXd rosenbrock_grad(const VectorXd& x) {
    VectorXd g(2);
    g(0) = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
    g(1) = 200.0 * (x(1) - x(0) * x(0));
    return g;
}

}  // namespace

TEST(Bfgs, QuadraticBowl) {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const VectorXd b = VectorXd::LinSpaced(3, -1.0, 2.0);
    const Objective f = [&](const VectorXd& x) { return 0.5 * x.dot(a * x) - b.dot(x); };
    const Gradient g = [&](const VectorXd& x) { return VectorXd(a * x - b); };
    const auto r = bfgs_minimize(f, g, VectorXd::Zero(3));
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.x - a.ldlt().solve(b)).norm(), 1e-6);
}

TEST(Bfgs, IsotropicQuadraticIsExact) {
    const VectorXd c = VectorXd::LinSpaced(5, -2.0, 3.0);
    const Objective f = [&](const VectorXd& x) { return 0.5 * (x - c).squaredNorm(); };
    const Gradient g = [&](const VectorXd& x) { return VectorXd(x - c); };
    const auto r = bfgs_minimize(f, g, VectorXd::Constant(5, 7.0));
    EXPECT_LT((r.x - c).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(r.iterations, 5 + 2);
}

TEST(Bfgs, RosenbrockFromStandardStart) {
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = bfgs_minimize(rosenbrock, rosenbrock_grad, x0);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.gradient_norm, 1e-6);
    EXPECT_NEAR(r.x(0), 1.0, 1e-5);
    EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(Bfgs, ObjectiveNeverIncreases) {
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = bfgs_minimize(rosenbrock, rosenbrock_grad, x0);
    for (std::size_t k = 1; k < r.trace.objective.size(); ++k)
        EXPECT_LE(r.trace.objective[k], r.trace.objective[k - 1]);
    EXPECT_EQ(r.trace.objective.size(), static_cast<std::size_t>(r.iterations) + 1);
}

TEST(Bfgs, StationaryStartReturnsImmediately) {
    const Objective f = [](const VectorXd& x) { return x.squaredNorm(); };
    const Gradient g = [](const VectorXd& x) { return VectorXd(2 * x); };
    const auto r = bfgs_minimize(f, g, VectorXd::Zero(4));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
}

TEST(Bfgs, AvoidsUndefinedRegion) {
    // -log(x) + x has its minimum at 1 and is undefined for x <= 0.
    const Objective f = [](const VectorXd& x) {
        if (x(0) <= 0.0) throw DomainError("log of nonpositive");
        return -std::log(x(0)) + x(0);
    };
    const Gradient g = [](const VectorXd& x) { return VectorXd::Constant(1, -1.0 / x(0) + 1.0); };
    const auto r = bfgs_minimize(f, g, VectorXd::Constant(1, 0.01));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x(0), 1.0, 1e-6);
}

TEST(Bfgs, IterationCapReported) {
    OptimizerControls c;
    c.max_iterations = 3;
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = bfgs_minimize(rosenbrock, rosenbrock_grad, x0, c);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3);
}

TEST(Bfgs, RejectsBadStartAndControls) {
    const Objective f = [](const VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
    const Gradient g = [](const VectorXd& x) { return VectorXd(x); };
    EXPECT_THROW(bfgs_minimize(f, g, VectorXd::Zero(1)), NumericFailure);
    OptimizerControls c;
    c.curvature = 1e-5;
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(FiniteDiff, CubicValues) {
    const Objective f = [](const VectorXd& x) { return x(0) * x(0) * x(0) + 2 * x(1); };
    VectorXd x(2);
    x << 1.5, -3.0;
    const VectorXd g = finite_diff_grad(f, x);
    EXPECT_NEAR(g(0), 6.75, 1e-8);
    EXPECT_NEAR(g(1), 2.0, 1e-8);
}

TEST(FiniteDiff, MatchesRosenbrockGradient) {
    VectorXd x(2);
    x << 0.3, -0.7;
    EXPECT_LT((finite_diff_grad(rosenbrock, x) - rosenbrock_grad(x)).norm(), 1e-6);
}

TEST(FiniteDiff, UndefinedNeighbourhoodNamesCoordinate) {
    const Objective f = [](const VectorXd& x) {
        if (x(1) <= 0.0) throw DomainError("outside");
        return std::log(x(1));
    };
    VectorXd x(2);
    x << 1.0, 1e-9;
    try {
        finite_diff_grad(f, x);
        FAIL();
    } catch (const NumericFailure& e) {
        EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
    }
}
