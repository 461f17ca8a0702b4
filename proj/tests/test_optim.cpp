#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spacoclust/errors.hpp"
#include "spacoclust/optim/lbfgsb.hpp"

using namespace spacoclust;
using optim::central_difference_gradient;
using optim::LbfgsbOptions;
using optim::LbfgsbSolver;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("unconstrained quadratic is solved to high accuracy") {
    // f(x) = (x0 - 3)^2 + 10 (x1 + 2)^2, minimum at (3, -2).
    auto f = [](const Eigen::VectorXd& x) {
        return (x[0] - 3.0) * (x[0] - 3.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0);
    };
    auto g = [](const Eigen::VectorXd& x) {
        return vec2(2.0 * (x[0] - 3.0), 20.0 * (x[1] + 2.0));
    };
    const double inf = std::numeric_limits<double>::infinity();
    const auto result = LbfgsbSolver().minimize(f, g, vec2(0.0, 0.0), vec2(-inf, -inf), vec2(inf, inf));
    CHECK(result.x[0] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(result.x[1] == doctest::Approx(-2.0).epsilon(1e-7));
    CHECK(std::fabs(result.f) <= 1e-10);
    CHECK(result.converged);
}

TEST_CASE("active bounds pin the solution to the box corner") {
    // Same quadratic, but the box [1, 2] x [0, 5] excludes the free minimum;
    // the constrained optimum is the corner (2, 0).
    auto f = [](const Eigen::VectorXd& x) {
        return (x[0] - 3.0) * (x[0] - 3.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0);
    };
    auto g = [](const Eigen::VectorXd& x) {
        return vec2(2.0 * (x[0] - 3.0), 20.0 * (x[1] + 2.0));
    };
    const auto result = LbfgsbSolver().minimize(f, g, vec2(1.5, 4.0), vec2(1.0, 0.0), vec2(2.0, 5.0));
    CHECK(result.x[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(result.x[1] == doctest::Approx(0.0).scale(1e-9));
}

TEST_CASE("rosenbrock inside a box converges to the curved valley minimum") {
    auto f = [](const Eigen::VectorXd& x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    auto g = [](const Eigen::VectorXd& x) {
        const double b = x[1] - x[0] * x[0];
        return vec2(-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b);
    };
    LbfgsbOptions options;
    options.max_iterations = 200;
    options.pg_tolerance = 1e-10;
    const auto result =
        LbfgsbSolver(options).minimize(f, g, vec2(-1.2, 1.0), vec2(-2.0, -2.0), vec2(2.0, 2.0));
    CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(result.x[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(result.f <= 1e-10);
}

TEST_CASE("starting point outside the box is clipped in") {
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    auto g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    const auto result =
        LbfgsbSolver().minimize(f, g, vec2(50.0, -50.0), vec2(1.0, -3.0), vec2(4.0, -1.0));
    CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.x[1] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("degenerate box with equal bounds returns that point") {
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    auto g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    const auto result =
        LbfgsbSolver().minimize(f, g, vec2(0.0, 0.0), vec2(2.0, 3.0), vec2(2.0, 3.0));
    CHECK(result.x[0] == 2.0);
    CHECK(result.x[1] == 3.0);
    CHECK(result.f == doctest::Approx(13.0).epsilon(1e-12));
}

TEST_CASE("non-finite objective at the start is an optimizer failure") {
    auto f = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
    auto g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()).eval(); };
    const double inf = std::numeric_limits<double>::infinity();
    try {
        LbfgsbSolver().minimize(f, g, vec2(0.0, 0.0), vec2(-inf, -inf), vec2(inf, inf));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OptimizerFailure);
    }
}

TEST_CASE("bound vectors must match the variable count and ordering") {
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    auto g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    try {
        LbfgsbSolver().minimize(f, g, vec2(0.0, 0.0), Eigen::VectorXd::Zero(3),
                                Eigen::VectorXd::Ones(3));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimensionMismatch);
    }
    try {
        LbfgsbSolver().minimize(f, g, vec2(0.0, 0.0), vec2(1.0, 1.0), vec2(0.0, 0.0));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigInvalid);
    }
}

TEST_CASE("central difference gradient is accurate on a smooth function") {
    auto f = [](const Eigen::VectorXd& x) {
        return std::sin(x[0]) * std::exp(0.3 * x[1]) + 0.5 * x[1] * x[1];
    };
    const double inf = std::numeric_limits<double>::infinity();
    const auto grad = central_difference_gradient(f, vec2(-inf, -inf), vec2(inf, inf));
    const Eigen::VectorXd x = vec2(0.7, -1.1);
    const Eigen::VectorXd g = grad(x);
    const double gx = std::cos(0.7) * std::exp(0.3 * -1.1);
    const double gy = 0.3 * std::sin(0.7) * std::exp(0.3 * -1.1) - 1.1;
    CHECK(g[0] == doctest::Approx(gx).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(gy).epsilon(1e-8));
}

TEST_CASE("central difference gradient never evaluates outside the box") {
    bool out_of_box = false;
    auto f = [&](const Eigen::VectorXd& x) {
        if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > 1.0) out_of_box = true;
        return x.squaredNorm();
    };
    const auto grad = central_difference_gradient(f, vec2(0.0, 0.0), vec2(1.0, 1.0));
    grad(vec2(0.0, 1.0));
    grad(vec2(1.0, 0.0));
    grad(vec2(0.5, 0.5));
    CHECK(!out_of_box);
}

TEST_CASE("finite difference driven minimization works without an analytic gradient") {
    auto f = [](const Eigen::VectorXd& x) {
        return std::pow(x[0] - 0.4, 4) + (x[1] - 2.0) * (x[1] - 2.0) + 1.5;
    };
    const Eigen::VectorXd lower = vec2(0.0, 0.0);
    const Eigen::VectorXd upper = vec2(10.0, 10.0);
    const auto result = LbfgsbSolver().minimize(f, central_difference_gradient(f, lower, upper),
                                                vec2(5.0, 5.0), lower, upper);
    CHECK(result.x[0] == doctest::Approx(0.4).epsilon(2e-2));
    CHECK(result.x[1] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(result.f == doctest::Approx(1.5).epsilon(1e-9));
}
