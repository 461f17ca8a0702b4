#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spacoclust/kernels.hpp"
#include "spacoclust/math/rng.hpp"

using namespace spacoclust;

TEST_CASE("kernel values at distance equal to the length scale") {
    CHECK(kernel_value(KernelParams::exponential(50.0), 50.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(kernel_value(KernelParams::gaussian(50.0), 50.0) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    // Rational quadratic with alpha 2, theta 50 at distance 100:
    // (1 + 100^2 / (2 * 2 * 50^2))^-2 = 2^-2.
    CHECK(kernel_value(KernelParams::rational_quadratic(50.0, 2.0), 100.0) ==
          doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("kernel value is one at distance zero for every family") {
    CHECK(kernel_value(KernelParams::exponential(3.0), 0.0) == 1.0);
    CHECK(kernel_value(KernelParams::gaussian(3.0), 0.0) == 1.0);
    CHECK(kernel_value(KernelParams::rational_quadratic(3.0, 1.5), 0.0) == 1.0);
}

TEST_CASE("kernel value decreases monotonically with distance") {
    const std::vector<KernelParams> families = {
        KernelParams::exponential(12.0),
        KernelParams::gaussian(12.0),
        KernelParams::rational_quadratic(12.0, 0.8),
    };
    for (const auto& params : families) {
        double prev = 1.0;
        for (double d = 0.5; d <= 60.0; d += 0.5) {
            const double v = kernel_value(params, d);
            CHECK(v > 0.0);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("rational quadratic approaches the gaussian kernel for large alpha") {
    const double theta = 20.0;
    const auto rq = KernelParams::rational_quadratic(theta, 1e6);
    const auto gauss = KernelParams::gaussian(theta);
    for (double d = 0.0; d <= 3.0 * theta; d += 1.0) {
        CHECK(std::fabs(kernel_value(rq, d) - kernel_value(gauss, d)) <= 1e-4);
    }
}

TEST_CASE("kernel parameter validation") {
    KernelParams p = KernelParams::exponential(10.0);
    CHECK_NOTHROW(p.check());

    p.values = Eigen::VectorXd::Zero(2);
    try {
        p.check();
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimensionMismatch);
    }

    p = KernelParams::gaussian(-1.0);
    try {
        p.check();
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveParameter);
    }

    p = KernelParams::rational_quadratic(10.0, 0.0);
    try {
        p.check();
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveParameter);
    }

    try {
        kernel_value(KernelParams::exponential(1.0), -0.5);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigInvalid);
    }
}

TEST_CASE("kernel kind names round-trip and bad names are parse errors") {
    for (KernelKind kind :
         {KernelKind::Exponential, KernelKind::RationalQuadratic, KernelKind::Gaussian}) {
        CHECK(parse_kernel_kind(kernel_kind_name(kind)) == kind);
    }
    CHECK(kernel_param_dim(KernelKind::RationalQuadratic) == 2);
    CHECK(kernel_param_dim(KernelKind::Exponential) == 1);
    CHECK(kernel_param_dim(KernelKind::Gaussian) == 1);
    try {
        parse_kernel_kind("matern");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
    }
}

TEST_CASE("kernel matrix over three collinear points at the gaussian length scale") {
    const double theta = 30.0;
    const std::vector<Coord> coords = {{0.0, 0.0}, {theta, 0.0}, {2.0 * theta, 0.0}};
    const Eigen::MatrixXd K = kernel_matrix(KernelParams::gaussian(theta), coords);
    CHECK(K(0, 0) == 1.0);
    CHECK(K(1, 1) == 1.0);
    CHECK(K(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(K(1, 2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(K(0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(K(1, 0) == K(0, 1));
    CHECK(K(2, 0) == K(0, 2));
}

TEST_CASE("kernel matrix is exactly symmetric with exact unit diagonal") {
    RandomStream rng(17);
    std::vector<Coord> coords;
    for (int j = 0; j < 25; ++j) {
        coords.push_back({100.0 * rng.uniform(), 100.0 * rng.uniform()});
    }
    const Eigen::MatrixXd K = kernel_matrix(KernelParams::exponential(35.0), coords);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < K.rows(); ++i) CHECK(K(i, i) == 1.0);
}

TEST_CASE("eigendecomposition of a two-point exponential kernel") {
    // Two points at the length scale: correlation a = e^-1, eigenvalues 1 +- a
    // with eigenvectors along (1, 1) and (1, -1).
    const double theta = 40.0;
    const std::vector<Coord> coords = {{0.0, 0.0}, {theta, 0.0}};
    const auto cache = kernel_eigen(kernel_matrix(KernelParams::exponential(theta), coords));
    REQUIRE(cache.order() == 2);
    const double a = std::exp(-1.0);
    CHECK(cache.eigenvalues[0] == doctest::Approx(1.0 + a).epsilon(1e-12));
    CHECK(cache.eigenvalues[1] == doctest::Approx(1.0 - a).epsilon(1e-12));
    CHECK(std::fabs(cache.eigenvectors(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cache.eigenvectors(0, 0) == doctest::Approx(cache.eigenvectors(1, 0)).epsilon(1e-12));
    CHECK(cache.eigenvectors(0, 1) == doctest::Approx(-cache.eigenvectors(1, 1)).epsilon(1e-12));
}

TEST_CASE("eigendecomposition of the identity matrix") {
    const auto cache = kernel_eigen(Eigen::MatrixXd::Identity(4, 4));
    REQUIRE(cache.order() == 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(cache.eigenvalues[j] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("eigendecomposition reconstructs the kernel matrix") {
    RandomStream rng(29);
    std::vector<Coord> coords;
    for (int j = 0; j < 10; ++j) {
        coords.push_back({80.0 * rng.uniform(), 80.0 * rng.uniform()});
    }
    for (const auto& params : {KernelParams::exponential(25.0), KernelParams::gaussian(25.0),
                               KernelParams::rational_quadratic(25.0, 1.5)}) {
        const Eigen::MatrixXd K = kernel_matrix(params, coords);
        const auto cache = kernel_eigen(K);
        const Eigen::MatrixXd rebuilt = cache.eigenvectors *
                                        cache.eigenvalues.asDiagonal() *
                                        cache.eigenvectors.transpose();
        CHECK((rebuilt - K).cwiseAbs().maxCoeff() <= 1e-8);
        // Sorted descending, all non-negative, trace preserved.
        for (Eigen::Index j = 1; j < cache.order(); ++j) {
            CHECK(cache.eigenvalues[j] <= cache.eigenvalues[j - 1]);
        }
        CHECK(cache.eigenvalues.minCoeff() >= 0.0);
        CHECK(cache.eigenvalues.sum() == doctest::Approx(static_cast<double>(K.rows())).epsilon(1e-10));
    }
}

TEST_CASE("tiny negative round-off eigenvalues are clamped to zero") {
    Eigen::MatrixXd K(2, 2);
    K << 1.0, 1.0, 1.0, 1.0;
    const auto cache = kernel_eigen(K);
    CHECK(cache.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cache.eigenvalues[1] == 0.0);
}

TEST_CASE("a genuinely indefinite matrix is rejected") {
    Eigen::MatrixXd K(2, 2);
    K << 1.0, 1.2, 1.2, 1.0;
    try {
        kernel_eigen(K);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotPositiveSemidefinite);
    }
}

TEST_CASE("kernel_eigen input validation") {
    try {
        kernel_eigen(Eigen::MatrixXd::Identity(2, 3));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimensionMismatch);
    }

    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.3, 0.4, 1.0;
    try {
        kernel_eigen(asym);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimensionMismatch);
    }

    Eigen::MatrixXd diag(2, 2);
    diag << 2.0, 0.0, 0.0, 2.0;
    try {
        kernel_eigen(diag);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigInvalid);
    }
}
