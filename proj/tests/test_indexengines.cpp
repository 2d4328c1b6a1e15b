#include <doctest.h>

#include "helpers.hpp"
#include "ncindex/indexengines.hpp"

using namespace ncindex;
using namespace testutil;

namespace {

ComplexMatrix shift_power(int n, int w) {
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k)
        if (k + w >= 0 && k + w < n) s(k + w, k) = 1.0;
    return s;
}

std::vector<int> tail_band(int n, int b) {
    std::vector<int> band;
    for (int k = n - b; k < n; ++k) band.push_back(k);
    return band;
}

const SpectralTriple& moyal20() {
    static const SpectralTriple t = moyal_triple(20, 2.0);
    return t;
}

}  // namespace

TEST_SUITE("indexengines") {

TEST_CASE("residue constants") {
    CHECK(alpha_k({0, 0}) == doctest::Approx(0.5));
    CHECK(alpha_k({1, 0}) == doctest::Approx(1.0 / 6.0));
    CHECK(alpha_k({0}) == doctest::Approx(1.0));
    CHECK(sigma_nl(1, 0, Parity::Odd) == doctest::Approx(0.5));
    CHECK(sigma_nl(1, 1, Parity::Odd) == doctest::Approx(1.0));
    CHECK(sigma_nl(2, 1, Parity::Even) == doctest::Approx(1.0));
    CHECK(sigma_nl(2, 2, Parity::Even) == doctest::Approx(1.0));
    CHECK(sigma_nl(2, 0, Parity::Even) == doctest::Approx(0.0));
    // (z+1/2)(z+3/2) = z^2 + 2z + 3/4
    CHECK(sigma_nl_exact(2, 0, Parity::Odd) == "3/4");
    CHECK(sigma_nl_exact(2, 1, Parity::Odd) == "2/1");
    CHECK(std::abs(eta_m(2, Parity::Even) - 4.0) < 1e-12);
    CHECK(std::abs(eta_m(1, Parity::Odd) + 2.0 * std::sqrt(cplx(0.0, 2.0 * kPi))) < 1e-12);
    CHECK(residue_degree_bound(1.0, Parity::Odd) == 1);
    CHECK(residue_degree_bound(2.0, Parity::Even) == 2);

    const ResidueConstants rc = residue_constants(2.0, Parity::Even);
    CHECK(rc.M == 2);
    for (const auto& [k, a] : rc.alpha) CHECK(a > 0.0);
    for (size_t n = 0; n < rc.sigma.size(); ++n)
        for (size_t l = 0; l < rc.sigma[n].size(); ++l)
            CHECK(rc.sigma[n][l] == doctest::Approx(sigma_nl(int(n), int(l), Parity::Even)));
}

TEST_CASE("fredholm_index counting") {
    CHECK(fredholm_index(identity(6)).filtered == 0);

    const int n = 20, b = 5;
    FredholmOptions o;
    o.row_band = o.col_band = tail_band(n, b);
    const FredholmResult one = fredholm_index(shift_power(n, 1), o);
    CHECK(one.raw == 0);
    CHECK(one.filtered == -1);
    CHECK(one.cokernel_filtered == 1);
    const FredholmResult two = fredholm_index(shift_power(n, -2), o);
    CHECK(two.filtered == 2);
    CHECK(two.kernel_raw == 2);

    ComplexMatrix amb = identity(3);
    amb(2, 2) = 3e-8;
    try {
        fredholm_index(amb);
        FAIL("expected AmbiguousGap");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AmbiguousGap);
    }
}

TEST_CASE("pairing on the circle") {
    const SpectralTriple c = circle_triple(16, {});
    const IndexClass u = circle_winding_class(c, 1);
    for (Method m : {Method::Compression, Method::TracePower, Method::NoDouble, Method::Chern}) {
        const MethodResult r = pairing_index(c, u, m);
        CHECK(r.rounded == -1);
        CHECK(r.gap < 1e-3);
    }
    const IndexClass one = identity_unitary_class(c);
    for (Method m : {Method::Compression, Method::TracePower, Method::NoDouble}) CHECK(pairing_index(c, one, m).rounded == 0);

    for (double mu : {0.1, 0.5, 1.0}) {
        PairingOptions o;
        o.mu = mu;
        CHECK(pairing_index(c, circle_winding_class(c, -2), Method::Compression, o).rounded == 2);
    }
    PairingOptions scaled;
    scaled.scale = 2.0;
    CHECK(pairing_index(c, u, Method::TracePower, scaled).rounded == -1);

    try {
        pairing_index(c, scalar_projection_class(moyal20()), Method::Compression);
        FAIL("expected ParityMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParityMismatch);
    }
}

TEST_CASE("pairing on the Moyal plane") {
    const IndexClass e = moyal_mode_class(moyal20(), {0, 1, 2});
    const MethodResult r = pairing_index(moyal20(), e, Method::Compression);
    CHECK(r.rounded == 3);
    CHECK(r.gap < 0.1);
    CHECK(pairing_index(moyal20(), scalar_projection_class(moyal20()), Method::Compression).rounded == 0);
}

TEST_CASE("run_method records errors") {
    const SpectralTriple c = circle_triple(8, {});
    const MethodResult r = run_method(c, circle_winding_class(c, 1), Method::McKeanSinger);
    CHECK_FALSE(r.ok);
    CHECK(!r.error.empty());
}

TEST_CASE("IndexReport verdict") {
    IndexReport rep;
    rep.finalize();
    CHECK_FALSE(rep.verdict);
    MethodResult a;
    a.method = "compression";
    a.value = -1.0;
    a.rounded = -1;
    a.ok = true;
    MethodResult b = a;
    b.method = "residue";
    b.value = -0.98;
    b.gap = 0.02;
    b.gap_tolerance = 0.3;
    rep.methods = {a, b};
    rep.finalize();
    CHECK(rep.verdict);
    CHECK(rep.agreed == -1);
    rep.methods[1].rounded = 0;
    rep.finalize();
    CHECK_FALSE(rep.verdict);
}

TEST_CASE("residue cocycle components") {
    const SpectralTriple c = circle_triple(16, {});
    // degree 0 belongs to even models only
    try {
        residue_cocycle_component(c, 0, {as_element(identity(c.dim()))});
        FAIL("expected ParityMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParityMismatch);
    }

    // a diagonal slot commutes with D and kills the term
    const IndexClass u = circle_winding_class(c, 1);
    const ComplexMatrix diag = circle_symbol_matrix(16, {{0, 2.0}});
    CHECK(std::abs(residue_cocycle_component(c, 1, {u.x.adjoint(), as_element(diag)})) < 1e-10);
}

TEST_CASE("residue index") {
    const SpectralTriple c = circle_triple(16, {});
    const MethodResult r = residue_index(c, circle_winding_class(c, 1));
    CHECK(std::abs(r.value - cplx(-1.0)) < 1e-3);

    const MethodResult m = residue_index(moyal20(), moyal_mode_class(moyal20(), {0}));
    CHECK(std::abs(m.value - cplx(1.0)) < 1e-3);
    CHECK(std::abs(residue_index(moyal20(), scalar_projection_class(moyal20())).value) < 1e-10);
}

TEST_CASE("resolvent expectations") {
    SpectralTriple toy;
    toy.kind = "toy";
    toy.D = ComplexMatrix::Zero(1, 1);
    toy.p = 1.0;
    toy.parity = Parity::Odd;
    toy.base_dim = 1;
    const SpectralTriple d = double_triple(toy, 1.0);
    const ResolventContext ctx(d);
    CHECK(ctx.abscissa() == doctest::Approx(0.25));
    for (double s : {0.0, 0.7, 2.0}) {
        // two eigenvalues of D^2 + 1 + s^2, both equal to 2 + s^2
        const cplx want = 2.0 * std::pow(2.0 + s * s, -1.5);
        CHECK(rel_err(ctx.expectation({std::nullopt}, 1.0, s), want) < 1e-8);
    }

    // commuting inputs reduce to a Cauchy formula through the eigenvalues
    const SpectralTriple c = double_triple(circle_triple(6, {}), 1.0);
    const ResolventContext cc(c);
    ComplexMatrix a0 = ComplexMatrix::Zero(c.dim(), c.dim());
    for (Eigen::Index i = 0; i < c.dim(); ++i) a0(i, i) = std::cos(0.3 * double(i));
    const ComplexMatrix d2 = c.D * c.D;
    const double q = c.p / 2.0 + 0.8;
    cplx want = 0.0;
    for (Eigen::Index i = 0; i < c.dim(); ++i) {
        const double x = 1.25 + d2(i, i).real();
        want += a0(i, i) * d2(i, i) * (-q) * std::pow(x, -q - 1.0);
    }
    CHECK(rel_err(cc.expectation({a0, d2}, 0.8, 0.5), want) < 1e-8);

    // odd total grading degree on an even triple
    const SpectralTriple tor = double_triple(torus_triple(2, 4, 1.0), 1.0);
    const ResolventContext tc(tor);
    const ComplexMatrix du = tc.d_comm(tor.generators.empty() ? identity(tor.dim()) : tor.generators[0].op);
    CHECK(std::abs(tc.expectation({std::nullopt, du}, 1.0, 0.3)) < 1e-10);

    ResolventContext bad(c, 0.0);
    CHECK(bad.abscissa() == doctest::Approx(0.25));
    CHECK_THROWS_AS(ResolventContext(c, 0.6), Error);
}

TEST_CASE("resolvent cocycle") {
    const SpectralTriple c0 = circle_triple(10, {});
    const SpectralTriple d = double_triple(c0, 2.0);
    const ResolventContext ctx(d);
    const Element u = double_element(circle_winding_class(c0, 1).x, c0.dim());
    const Tuple a{u.adjoint(), u};
    const cplx v = ctx.resolvent_cocycle(a, 1.0);
    CHECK(rel_err(ctx.zeta_representation(a, 1.0), v) < 1e-3);

    const Element flat = as_element(ComplexMatrix(d.D * d.D));
    CHECK(std::abs(ctx.resolvent_cocycle({u.adjoint(), flat}, 1.0)) < 1e-12);
}

TEST_CASE("McKean-Singer") {
    CHECK(std::abs(mckean_singer(moyal20(), scalar_projection_class(moyal20())).value) < 1e-10);
    const MethodResult r0 = mckean_singer(moyal20(), moyal_mode_class(moyal20(), {0}));
    CHECK(std::abs(r0.value - cplx(1.0)) < 5e-2);
    const MethodResult r1 = mckean_singer(moyal20(), moyal_mode_class(moyal20(), {0, 1}));
    CHECK(std::abs(r1.value - cplx(2.0)) < 5e-2);
    REQUIRE(r0.diagnostics.count("commutator_defect") == 1);
    CHECK(r0.diagnostics.at("commutator_defect") < 1e-10);
    const SpectralTriple c = circle_triple(8, {});
    CHECK_THROWS_AS(mckean_singer(c, circle_winding_class(c, 1)), Error);
}

}  // TEST_SUITE
