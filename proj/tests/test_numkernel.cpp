#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "ncindex/numkernel.hpp"

using namespace ncindex;
using namespace testutil;

TEST_SUITE("numkernel") {

TEST_CASE("eig_hermitian small cases") {
    ComplexMatrix z = ComplexMatrix::Zero(1, 1);
    HermEig e = eig_hermitian(z);
    CHECK(e.values.size() == 1);
    CHECK(e.values(0) == doctest::Approx(0.0));

    ComplexMatrix sz(2, 2);
    sz << 1.0, 0.0, 0.0, -1.0;
    e = eig_hermitian(sz);
    CHECK(e.values(0) == doctest::Approx(-1.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
}

TEST_CASE("eig_hermitian residual and orthonormality on random input") {
    std::mt19937 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        const ComplexMatrix m = random_hermitian(rng, 8);
        const HermEig e = eig_hermitian(m);
        const ComplexMatrix v = e.vectors();
        for (int i = 0; i < 8; ++i) CHECK((m * v.col(i) - e.values(i) * v.col(i)).norm() <= 1e-10 * spectral_norm(m));
        CHECK(max_abs(v.adjoint() * v - identity(8)) <= 1e-10);
        const ComplexMatrix back = v * e.values.cast<cplx>().asDiagonal() * v.adjoint();
        CHECK(spectral_norm(back - m) <= 1e-10 * spectral_norm(m));
    }
}

TEST_CASE("eig_hermitian splits block diagonal input") {
    ComplexMatrix m = ComplexMatrix::Zero(4, 4);
    m(0, 0) = 2.0;
    m(1, 2) = cplx(0.0, 1.0);
    m(2, 1) = cplx(0.0, -1.0);
    m(3, 3) = -3.0;
    const HermEig e = eig_hermitian(m);
    CHECK(e.blocks.size() == 3);
    CHECK(e.values(0) == doctest::Approx(-3.0));
    CHECK(e.values(3) == doctest::Approx(2.0));
}

TEST_CASE("eig_hermitian rejects non-Hermitian input") {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 0.0, 0.0;
    try {
        eig_hermitian(m);
        FAIL("expected NonHermitianInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonHermitianInput);
    }
}

TEST_CASE("apply_function") {
    std::mt19937 rng(3);
    const ComplexMatrix m = random_hermitian(rng, 8);
    CHECK(max_abs(apply_function([](double x) { return x; }, m) - m) <= 1e-12 * std::max(1.0, max_abs(m)) * 10);

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(1, 1) = std::log(2.0);
    const ComplexMatrix ex = apply_function([](double x) { return std::exp(x); }, d);
    CHECK(std::abs(ex(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(ex(1, 1) - 2.0) < 1e-12);

    const ComplexMatrix sq = apply_function([](double x) { return x * x; }, m);
    CHECK(max_abs(sq - m * m) <= 1e-10 * max_abs(m * m));
    // functional calculus commutes with its argument
    CHECK(max_abs(sq * m - m * sq) <= 1e-10 * max_abs(m * m * m));
}

TEST_CASE("apply_function reports undefined values") {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = -1.0;
    CHECK_THROWS_AS(apply_function([](double x) { return std::sqrt(x); }, m), Error);
}

TEST_CASE("svd identity and rank one") {
    const SvdResult s = svd(identity(4), std::vector<int>{3});
    for (int i = 0; i < 4; ++i) CHECK(s.values(i) == doctest::Approx(1.0));
    for (int i = 0; i < 4; ++i) {
        const double m = s.left_mass(i);
        CHECK((std::abs(m) < 1e-12 || std::abs(m - 1.0) < 1e-12));
    }

    std::mt19937 rng(5);
    const ComplexMatrix x = random_matrix(rng, 6, 1), y = random_matrix(rng, 5, 1);
    const SvdResult r = svd(x * y.adjoint(), std::vector<int>{});
    CHECK(r.values(0) == doctest::Approx(x.norm() * y.norm()).epsilon(1e-12));
    for (int i = 1; i < r.values.size(); ++i) CHECK(r.values(i) <= 1e-12 * r.values(0));
    const ComplexMatrix a = x * y.adjoint();
    ComplexMatrix sig = ComplexMatrix::Zero(r.u.cols(), r.v.cols());
    for (int i = 0; i < r.values.size(); ++i) sig(i, i) = r.values(i);
    CHECK(spectral_norm(r.u * sig * r.v.adjoint() - a) <= 1e-10 * spectral_norm(a));
}

TEST_CASE("svd of a truncated shift localizes the null vectors at the edges") {
    const int n = 10;
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) s(k + 1, k) = 1.0;
    const SvdResult r = svd(s, std::vector<int>{0, n - 1});
    CHECK(r.values(n - 1) < 1e-12);
    CHECK(r.values(n - 2) == doctest::Approx(1.0));
    CHECK(r.left_mass(n - 1) == doctest::Approx(1.0));
    CHECK(r.right_mass(n - 1) == doctest::Approx(1.0));
    CHECK(std::abs(r.u(0, n - 1)) == doctest::Approx(1.0));
    CHECK(std::abs(r.v(n - 1, n - 1)) == doctest::Approx(1.0));
}

TEST_CASE("schatten_norm") {
    CHECK(schatten_norm(identity(5), 1.0) == doctest::Approx(5.0));
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 4.0;
    CHECK(schatten_norm(d, 2.0) == doctest::Approx(5.0));
    CHECK(schatten_norm(d, kInf) == doctest::Approx(4.0));
    CHECK_THROWS_AS(schatten_norm(d, 0.5), Error);

    std::mt19937 rng(7);
    for (int i = 0; i < 20; ++i) {
        const ComplexMatrix a = random_matrix(rng, 6, 6), b = random_matrix(rng, 6, 6);
        CHECK(schatten_norm(a * b, 1.0) <= schatten_norm(a, 2.0) * schatten_norm(b, 2.0) * (1 + 1e-12));
        CHECK(schatten_norm(a * b, 3.0) <= spectral_norm(a) * schatten_norm(b, 3.0) * (1 + 1e-12));
    }
}

TEST_CASE("gamma_complex") {
    CHECK(std::abs(gamma_complex(0.5) - std::sqrt(kPi)) < 1e-12);
    CHECK(std::abs(gamma_complex(5.0) - 24.0) < 1e-10);
    const cplx z(0.3, 0.2);
    const cplx lhs = gamma_complex(z) * gamma_complex(1.0 - z);
    CHECK(rel_err(lhs, kPi / std::sin(kPi * z)) < 1e-10);
    CHECK_THROWS_AS(gamma_complex(-2.0), Error);
    CHECK_THROWS_AS(gamma_complex(0.0), Error);
}

TEST_CASE("hurwitz_zeta") {
    CHECK(rel_err(hurwitz_zeta(2.0, 1.0), kPi * kPi / 6.0) < 1e-12);
    CHECK(rel_err(hurwitz_zeta(2.0, 0.5), kPi * kPi / 2.0) < 1e-12);
    double direct = 0.0;
    const int terms = 1000000;
    for (int k = terms - 1; k >= 0; --k) direct += std::pow(k + 1.7, -3.0);
    // tail beyond the partial sum is about 1/(2 terms^2)
    direct += 0.5 / (double(terms) * terms);
    CHECK(rel_err(hurwitz_zeta(3.0, 1.7), direct) < 1e-8);
    try {
        hurwitz_zeta(1.0, 1.0);
        FAIL("expected PoleError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PoleError);
    }
}

TEST_CASE("laurent_residue") {
    CHECK(std::abs(laurent_residue([](cplx z) { return 1.0 / z; }, 0.0, 0.5, 0) - 1.0) < 1e-10);
    CHECK(std::abs(laurent_residue([](cplx z) { return gamma_complex(z); }, 0.0, 0.5, 0) - 1.0) < 1e-10);
    CHECK(std::abs(laurent_residue([](cplx z) { return hurwitz_zeta(2.0 * z, 1.0); }, 0.5, 0.2, 0) - 0.5) < 1e-9);
    // radius independence
    const cplx r1 = laurent_residue([](cplx z) { return gamma_complex(z); }, 0.0, 0.25, 0);
    const cplx r2 = laurent_residue([](cplx z) { return gamma_complex(z); }, 0.0, 0.5, 0);
    CHECK(std::abs(r1 - r2) < 1e-9);
    // l = -1 picks the regular part; l = 1 the next Laurent coefficient
    CHECK(std::abs(laurent_residue([](cplx z) { return 3.0 + 1.0 / (z * z); }, 0.0, 0.5, -1) - 3.0) < 1e-10);
    CHECK(std::abs(laurent_residue([](cplx z) { return 1.0 / (z * z); }, 0.0, 0.5, 1) - 1.0) < 1e-10);
}

}  // TEST_SUITE
