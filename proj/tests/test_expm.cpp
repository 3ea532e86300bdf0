#include <catch2/catch_amalgamated.hpp>

#include "hybridft/expm.hpp"
#include "oracles.hpp"

using namespace hybridft;
using namespace hybridft::num;

TEST_CASE("expm of zero is identity") {
    Matrix z(3, 3);
    Matrix e = expm(z);
    REQUIRE(frobenius_norm(e - Matrix::identity(3)) == 0.0);
}

TEST_CASE("expm of planar generator is the closed-form rotation") {
    const double theta = 3.14159265358979323846 / 2.0;
    Matrix g(2, 2, {0, theta, -theta, 0});
    Matrix e = expm(g);
    Matrix expect(2, 2, {std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta)});
    REQUIRE(frobenius_norm(e - expect) < 1e-10);
    REQUIRE(std::abs(e(0, 1) - 1.0) < 1e-10);
    REQUIRE(std::abs(e(1, 0) + 1.0) < 1e-10);
}

TEST_CASE("expm of random skew matches 30-term Taylor oracle and is orthogonal") {
    Rng rng(11);
    Matrix q = oracle::random_skew(5, rng);
    Matrix e = expm(q);
    REQUIRE(orthogonality_drift(e) <= 1e-10);
    Matrix ref = oracle::taylor_expm(q, 30);
    REQUIRE(frobenius_norm(e - ref) < 1e-8);
}

TEST_CASE("expm rejects non-square input") {
    Matrix m(2, 3);
    REQUIRE_THROWS_AS(expm(m), shape_error);
}

TEST_CASE("skew exponentials stay orthogonal across sizes 2..16") {
    Rng rng(31);
    for (std::size_t n = 2; n <= 16; ++n) {
        Matrix q = oracle::random_skew(n, rng, 0.8);
        REQUIRE(orthogonality_drift(expm(q)) <= 1e-10);
    }
}

TEST_CASE("complex skew-Hermitian exponential is unitary") {
    Rng rng(17);
    CMatrix g = random_gaussian<std::complex<double>>(6, 6, rng);
    CMatrix b = g - adjoint(g);  // skew-Hermitian
    CMatrix u = expm(b);
    REQUIRE(orthogonality_drift(u) <= 1e-10);
    CMatrix ref = oracle::taylor_expm(b, 40);
    REQUIRE(frobenius_norm(u - ref) < 1e-8);
}

TEST_CASE("scaling handles large norms") {
    Rng rng(5);
    Matrix q = oracle::random_skew(4, rng, 20.0);  // one-norm far above 0.5
    Matrix e = expm(q);
    REQUIRE(orthogonality_drift(e) <= 1e-9);
}
