#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "ncindex/indexengines.hpp"
#include "ncindex/zeta.hpp"

using namespace ncindex;
using namespace testutil;

namespace {

LatticeSymbol unit_symbol() {
    LatticeSymbol s;
    s.plus = {1.0};
    s.minus = {1.0};
    s.core = {{-1, 1.0}, {0, 1.0}, {1, 1.0}};
    return s;
}

std::vector<HeatSample> circle_heat_samples() {
    const SpectralTriple c = circle_triple(160, {});
    const HeatTrace h(identity(c.dim()), eig_hermitian(c.D));
    return h.sample(log_grid(1e-3, 1e-1, 40));
}

}  // namespace

TEST_SUITE("zeta") {

TEST_CASE("lattice model against a partial sum") {
    const ZetaModel z = lattice_symbol_model(unit_symbol());
    double direct = 0.0;
    const int K = 200000;
    for (int k = K; k >= 1; --k) direct += 2.0 * std::pow(1.0 + double(k) * k, -2.0);
    direct += 1.0 + 2.0 / (3.0 * std::pow(double(K), 3.0));
    CHECK(std::abs(zeta_eval(z, 2.0) - direct) < 1e-8);
    // the same series through the model triple
    const ZetaModel zc = coefficient_zeta(circle_triple(16, {}), identity(33), 0.0);
    CHECK(std::abs(zeta_eval(zc, 2.0) - direct) < 1e-8);
}

TEST_CASE("lattice_power_tail matches a direct sum") {
    cplx direct = 0.0;
    for (int k = 100000; k >= 3; --k) direct += double(k) * std::pow(1.0 + double(k) * k, -2.5);
    CHECK(std::abs(lattice_power_tail(1, 2.5, 3) - direct) < 1e-9);
}

TEST_CASE("epstein zeta") {
    double direct = 0.0;
    const int R = 300;
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b) direct += std::pow(1.0 + double(a) * a + double(b) * b, -3.0);
    CHECK(std::abs(epstein_zeta(2, 3.0) - direct) < 1e-8);
    CHECK(std::abs(epstein_zeta(1, 2.0) - zeta_eval(lattice_symbol_model(unit_symbol()), 2.0)) < 1e-10);
    CHECK_THROWS_AS(epstein_zeta(2, 1.0), Error);
}

TEST_CASE("plane profile with zero integral vanishes") {
    const PlaneProfile pp(2.0);
    const ZetaModel z = pp.zeta_model(0.0, 1.0);
    for (cplx s : {cplx(0.3), cplx(1.7, 0.4), cplx(-0.2, 1.0)}) CHECK(std::abs(zeta_eval(z, s)) == 0.0);
}

TEST_CASE("lower incomplete gamma") {
    for (double x : {0.1, 1.0, 4.0}) CHECK(std::abs(lower_incomplete_gamma(1.0, x) - (1.0 - std::exp(-x))) < 1e-12);
    CHECK(std::abs(lower_incomplete_gamma(0.5, 2.0) - std::sqrt(kPi) * std::erf(std::sqrt(2.0))) < 1e-12);
}

TEST_CASE("heat_trace_fit oracles") {
    std::vector<HeatSample> s;
    for (double t : log_grid(1e-3, 1e-1, 40)) s.push_back({t, std::pow(t, -0.5)});
    const ZetaModel m = heat_trace_fit(s, 1.0);
    REQUIRE(m.coefficients.size() == 4);
    CHECK(m.coefficients[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.exponents[0] == doctest::Approx(-0.5));
    CHECK(std::abs(tau_l(m, 0, 0.5) - 1.0 / std::sqrt(kPi)) < 1e-6);

    std::vector<HeatSample> c;
    for (double t : log_grid(1e-3, 1e-1, 40)) c.push_back({t, 2.5});
    const ZetaModel mc = heat_trace_fit(c, 0.0, 1);
    CHECK(mc.coefficients[0] == doctest::Approx(2.5));
    for (const auto& p : mc.poles) CHECK(p.location.real() <= 0.0);

    s.resize(5);
    try {
        heat_trace_fit(s, 1.0);
        FAIL("expected IllConditionedFit");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IllConditionedFit);
    }
}

TEST_CASE("circle heat-fit residue agrees with the closed form") {
    const ZetaModel fit = heat_trace_fit(circle_heat_samples(), 1.0);
    CHECK(fit.fit_ok);
    const cplx r_fit = tau_l(fit, 0, 0.5);
    CHECK(std::abs(r_fit - 1.0) < 0.02);
    const cplx r_mer = tau_l(lattice_symbol_model(unit_symbol()), 0, 0.5);
    CHECK(std::abs(r_mer - 1.0) < 1e-8);
    CHECK(std::abs(r_fit - r_mer) < 0.02);
}

TEST_CASE("tau_l on elementary models") {
    const cplx c(1.5, -0.5);
    const ZetaModel k = constant_model(c);
    CHECK(std::abs(tau_l(k, -1) - c) < 1e-12);
    CHECK(std::abs(tau_l(k, 0)) < 1e-12);

    const ZetaModel p = meromorphic_model([c](cplx z) { return c / z; }, {{0.0, 1}});
    CHECK(std::abs(tau_l(p, 0) - c) < 1e-12);
    CHECK(std::abs(tau_l(p, -1)) < 1e-12);
    CHECK_THROWS_AS(zeta_eval(p, 0.0), Error);
}

TEST_CASE("torus p=1 residue through the Hurwitz backend") {
    const SpectralTriple t = torus_triple(1, 16, 1.0);
    const ZetaModel z = coefficient_zeta(t, identity(t.dim()), 0.5);
    CHECK(std::abs(tau_l(z, 0) - 1.0) < 1e-6);
}

TEST_CASE("residue is covariant under recentering") {
    const ZetaModel base = lattice_symbol_model(unit_symbol());
    const ZetaModel shifted = meromorphic_model([base](cplx z) { return zeta_eval(base, z + 0.5); }, {{0.0, 1}});
    CHECK(std::abs(tau_l(base, 0, 0.5) - tau_l(shifted, 0)) < 1e-9);
    CHECK(std::abs(tau_l(base, 1, 0.5) - tau_l(shifted, 1)) < 1e-9);
}

TEST_CASE("heat csv round trip") {
    const std::vector<HeatSample> s{{1e-3, 56.0}, {0.01, 17.7245385}, {0.1, 5.6}};
    std::stringstream ss;
    write_heat_csv(ss, s);
    const std::vector<HeatSample> back = read_heat_csv(ss);
    REQUIRE(back.size() == s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        CHECK(back[i].t == s[i].t);
        CHECK(back[i].value == s[i].value);
    }
    std::stringstream bad("t,value\n0.1,abc\n");
    CHECK_THROWS_AS(read_heat_csv(bad), Error);
}

}  // TEST_SUITE
