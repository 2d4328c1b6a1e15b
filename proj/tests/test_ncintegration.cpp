#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "ncindex/models.hpp"
#include "ncindex/ncintegration.hpp"
#include "ncindex/psido.hpp"

using namespace ncindex;
using namespace testutil;

namespace {

ComplexMatrix one() { return ComplexMatrix::Ones(1, 1); }
ComplexMatrix zero1() { return ComplexMatrix::Zero(1, 1); }

ComplexMatrix random_psd(std::mt19937& rng, int n) {
    const ComplexMatrix a = random_matrix(rng, n, n);
    return a * a.adjoint();
}

ComplexMatrix diag_d(int n) {
    ComplexMatrix d = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = double(i - n / 2);
    return d;
}

std::vector<HeatSample> theta_samples(int p) {
    std::vector<HeatSample> s;
    for (double t : log_grid(1e-3, 1e-1, 40)) {
        double th = 0.0;
        for (int k = -400; k <= 400; ++k) th += std::exp(-t * k * k);
        s.push_back({t, std::pow(th, p)});
    }
    return s;
}

}  // namespace

TEST_SUITE("ncintegration") {

TEST_CASE("weight_phi_s examples") {
    CHECK(std::abs(weight_phi_s(one(), zero1(), 1.7) - 1.0) < 1e-14);
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    CHECK(std::abs(weight_phi_s(identity(2), d, 2.0) - 1.0) < 1e-14);
    CHECK_THROWS_AS(weight_phi_s(identity(3), d, 2.0), Error);

    std::mt19937 rng(17);
    const ComplexMatrix dd = diag_d(7);
    const PsidoContext ctx(dd);
    for (int rep = 0; rep < 10; ++rep) {
        const ComplexMatrix t = random_psd(rng, 7);
        const ComplexMatrix r = sqrt_psd(t);
        const cplx want = (r * ctx.power_1p(-1.5) * r).trace();  // s = 1.5
        const cplx got = weight_phi_s(t, ctx, 1.5);
        CHECK(rel_err(got, want) < 1e-10);
        CHECK(got.real() >= 0.0);
    }
}

TEST_CASE("weighted trace masks entries") {
    RealVector w = RealVector::Ones(3);
    w(2) = 0.0;
    ComplexMatrix t = identity(3) * 2.0;
    CHECK(std::abs(weighted_trace(t, w) - 4.0) < 1e-14);
}

TEST_CASE("q_norm examples") {
    const PsidoContext ctx1(zero1());
    CHECK(q_norm(ComplexMatrix::Zero(1, 1), ctx1, 1.0, 1) == doctest::Approx(0.0));
    CHECK(q_norm(one(), ctx1, 1.0, 1) == doctest::Approx(std::sqrt(3.0)));

    std::mt19937 rng(23);
    const PsidoContext ctx(diag_d(6));
    for (int rep = 0; rep < 20; ++rep) {
        const ComplexMatrix t = random_matrix(rng, 6, 6), s = random_matrix(rng, 6, 6);
        CHECK(q_norm(t * s, ctx, 1.0, 2) <= q_norm(t, ctx, 1.0, 2) * q_norm(s, ctx, 1.0, 2) * (1 + 1e-12));
    }
}

TEST_CASE("p_norm_tracial examples") {
    const PsidoContext ctx1(zero1());
    CHECK(p_norm_tracial(one(), ctx1, 1.0, 1) == doctest::Approx(3.0));
    CHECK(p_norm_tracial(ComplexMatrix::Zero(1, 1), ctx1, 1.0, 1) == doctest::Approx(0.0));

    std::mt19937 rng(29);
    const PsidoContext ctx(diag_d(6));
    for (int rep = 0; rep < 20; ++rep) {
        const ComplexMatrix a = random_psd(rng, 6);
        const double q = q_norm(sqrt_psd(a), ctx, 1.0, 3);
        CHECK(std::abs(p_norm_tracial(a, ctx, 1.0, 3) - q * q) <= 1e-9 * q * q);
    }
}

TEST_CASE("p_norm_tracial invariants") {
    std::mt19937 rng(31);
    const ComplexMatrix d = diag_d(6);
    const PsidoContext ctx(d);
    for (int rep = 0; rep < 10; ++rep) {
        const ComplexMatrix t = random_matrix(rng, 6, 6);
        CHECK(p_norm_tracial(t, ctx, 1.0, 1) <= p_norm_tracial(t, ctx, 1.0, 2) * (1 + 1e-12));
        CHECK(q_norm(t, ctx, 1.0, 1) <= q_norm(t, ctx, 1.0, 2) * (1 + 1e-12));
        // bimodule bound with f = cos on spec(D)
        const ComplexMatrix f = apply_function([](double x) { return std::cos(x); }, d);
        CHECK(p_norm_tracial(t * f, ctx, 1.0, 2) <= p_norm_tracial(t, ctx, 1.0, 2) * (1 + 1e-12));
        CHECK(p_norm_tracial(f * t, ctx, 1.0, 2) <= p_norm_tracial(t, ctx, 1.0, 2) * (1 + 1e-12));
    }
}

TEST_CASE("p_norm_tracial is *-invariant where the weight is tracial") {
    // phi_s restricted to the commutant of D is a weighted sum of block traces
    std::mt19937 rng(33);
    ComplexMatrix d = ComplexMatrix::Zero(7, 7);
    const int level[7] = {0, 0, 0, 1, 1, 2, 2};
    for (int i = 0; i < 7; ++i) d(i, i) = 1.5 * level[i];
    const PsidoContext ctx(d);
    for (int rep = 0; rep < 10; ++rep) {
        ComplexMatrix t = random_matrix(rng, 7, 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                if (level[i] != level[j]) t(i, j) = 0.0;
        const double a = p_norm_tracial(t, ctx, 1.0, 2);
        CHECK(std::abs(a - p_norm_tracial(t.adjoint(), ctx, 1.0, 2)) < 1e-10 * a);
    }
}

TEST_CASE("p_nl_seminorm") {
    std::mt19937 rng(37);
    const PsidoContext ctx(diag_d(5));
    const ComplexMatrix t = random_matrix(rng, 5, 5);
    CHECK(p_nl_seminorm(t, ctx, 1.0, 2, 0) == doctest::Approx(p_norm_tracial(t, ctx, 1.0, 2)));
    const ComplexMatrix f = apply_function([](double x) { return x * x - 1.0; }, ctx.d());
    CHECK(p_nl_seminorm(f, ctx, 1.0, 2, 3) == doctest::Approx(p_norm_tracial(f, ctx, 1.0, 2)));

    // circle shift: explicit entries of u and delta(u) in the D eigenbasis
    const int N = 8;
    const SpectralTriple c = circle_triple(N, {});
    const ComplexMatrix u = circle_symbol_matrix(N, {{1, 1.0}});
    const PsidoContext cc(c.D);
    const double s = 1.0 + 1.0 / 2.0;
    double phi_u = 0.0, phi_du = 0.0, norm_du = 0.0;
    for (int k = -N; k < N; ++k) {
        // |u| and |delta u| are diagonal with entries at column k
        const double w = std::pow(1.0 + double(k) * k, -s / 2.0);
        const double c_k = std::abs(std::abs(k + 1) - std::abs(k));
        phi_u += w;
        phi_du += w * c_k;
        norm_du = std::max(norm_du, c_k);
    }
    const double want = (1.0 + 2.0 * phi_u) + (norm_du + 2.0 * phi_du);
    CHECK(p_nl_seminorm(u, cc, 1.0, 2, 1) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("spectral_dimension_fit") {
    const DimensionFit f1 = spectral_dimension_fit(theta_samples(1));
    CHECK(std::abs(f1.p_hat - 1.0) < 0.05);
    const DimensionFit f2 = spectral_dimension_fit(theta_samples(2));
    CHECK(std::abs(f2.p_hat - 2.0) < 0.05);

    std::vector<HeatSample> flat;
    for (double t : log_grid(1e-3, 1e-1, 40)) flat.push_back({t, 2.0 * std::exp(-t)});
    try {
        spectral_dimension_fit(flat);
        FAIL("expected DegenerateWindow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateWindow);
    }
}

TEST_CASE("summability report is nonnegative") {
    const PsidoContext ctx(diag_d(6));
    std::mt19937 rng(41);
    const SummabilityReport r = summability_report(random_matrix(rng, 6, 6), ctx, 1.0, {1.5, 2.0, 3.0}, {1, 2, 4});
    for (auto& [s, v] : r.phi_values) CHECK(v.real() >= 0.0);
    for (auto& [n, v] : r.q_values) CHECK(v >= 0.0);
    for (auto& [n, v] : r.p_values) CHECK(v >= 0.0);
}

}  // TEST_SUITE
