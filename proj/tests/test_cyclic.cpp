#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "ncindex/cyclic.hpp"
#include "ncindex/indexengines.hpp"

using namespace ncindex;
using namespace testutil;

namespace {

Tuple random_tuple(std::mt19937& rng, int len, int n) {
    Tuple t;
    for (int i = 0; i < len; ++i) t.push_back(as_element(random_matrix(rng, n, n)));
    return t;
}

// phi(a0, a1) = tr(a0 X a1 Y)
Cochain random_1_cochain(std::mt19937& rng, int n) {
    const ComplexMatrix x = random_matrix(rng, n, n), y = random_matrix(rng, n, n);
    Cochain c;
    c.arity = 1;
    c.parity = Parity::Odd;
    c.eval = [x, y](const Tuple& a) { return (a[0].full() * x * a[1].full() * y).trace(); };
    return c;
}

// phi(a0, a1, a2) = tr(a0 Z [X, a1] [Y, a2]); normalised because scalars commute with X and Y
Cochain random_normalised_2_cochain(std::mt19937& rng, int n) {
    const ComplexMatrix x = random_matrix(rng, n, n), y = random_matrix(rng, n, n), z = random_matrix(rng, n, n);
    Cochain c;
    c.arity = 2;
    c.parity = Parity::Even;
    c.eval = [x, y, z](const Tuple& a) {
        return (a[0].full() * z * commutator(x, a[1].full()) * commutator(y, a[2].full())).trace();
    };
    return c;
}

ComplexMatrix random_involution(std::mt19937& rng, int n) {
    const ComplexMatrix q = random_matrix(rng, n, n).householderQr().householderQ();
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) s(i, i) = i % 2 ? -1.0 : 1.0;
    return q * s * q.adjoint();
}

ComplexMatrix pauli_x() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

ComplexMatrix pauli_z() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

}  // namespace

TEST_SUITE("cyclic") {

TEST_CASE("hochschild_b on a 0-cochain") {
    Cochain tr;
    tr.arity = 0;
    tr.eval = [](const Tuple& a) { return a[0].full().trace(); };
    std::mt19937 rng(1);
    const ComplexMatrix x = random_matrix(rng, 4, 4), w = random_matrix(rng, 4, 4);
    const ComplexMatrix r = random_matrix(rng, 4, 4);
    Cochain tw;
    tw.arity = 0;
    tw.eval = [r](const Tuple& a) { return (a[0].full() * r).trace(); };
    const cplx got = hochschild_b(tw)({as_element(x), as_element(w)});
    CHECK(std::abs(got - ((x * w * r).trace() - (w * x * r).trace())) < 1e-10);

    // the trace is a Hochschild cocycle, and b of anything vanishes on commuting inputs
    CHECK(std::abs(hochschild_b(tr)({as_element(x), as_element(w)})) < 1e-10);
    const ComplexMatrix d1 = random_matrix(rng, 4, 1).asDiagonal(), d2 = random_matrix(rng, 4, 1).asDiagonal();
    CHECK(std::abs(hochschild_b(tw)({as_element(d1), as_element(d2)})) < 1e-10);
}

TEST_CASE("b o b = 0") {
    std::mt19937 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const Cochain phi = random_1_cochain(rng, 3);
        const Cochain bb = hochschild_b(hochschild_b(phi));
        CHECK(bb.arity == 3);
        const Tuple a = random_tuple(rng, 4, 3);
        CHECK(std::abs(bb(a)) < 1e-9 * 1e3);
    }
}

TEST_CASE("connes_B identities") {
    std::mt19937 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const Cochain phi = random_normalised_2_cochain(rng, 3);
        const Cochain bb = connes_B(connes_B(phi));
        CHECK(bb.arity == 0);
        CHECK(std::abs(bb(random_tuple(rng, 1, 3))) < 1e-9);

        const Tuple a = random_tuple(rng, 3, 3);
        const cplx lhs = hochschild_b(connes_B(phi))(a) + connes_B(hochschild_b(phi))(a);
        double scale = 1.0;
        for (const auto& e : a) scale *= spectral_norm(e.a);
        CHECK(std::abs(lhs) < 1e-9 * scale * 1e2);
    }

    // vanishing on unit-inserted tuples means B vanishes
    Cochain kill;
    kill.arity = 2;
    kill.eval = [](const Tuple& a) { return std::abs(a[0].c) > 0 ? cplx(0.0) : cplx(1.0); };
    std::mt19937 r2(4);
    CHECK(std::abs(connes_B(kill)(random_tuple(r2, 2, 2))) == 0.0);

    Cochain zero;
    zero.arity = 0;
    zero.eval = [](const Tuple&) { return cplx(0.0); };
    try {
        connes_B(zero);
        FAIL("expected ArityUnderflow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ArityUnderflow);
    }
}

TEST_CASE("conditional_trace") {
    std::mt19937 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const ComplexMatrix t = random_matrix(rng, 6, 6);
        CHECK(std::abs(conditional_trace(t, identity(6)) - t.trace()) < 1e-10);
        CHECK(std::abs(conditional_trace(t, random_involution(rng, 6)) - t.trace()) < 1e-9);
    }
    // F T + T F = 0
    CHECK(std::abs(conditional_trace(pauli_x(), pauli_z())) < 1e-15);
    try {
        conditional_trace(identity(2), 2.0 * identity(2));
        FAIL("expected NotAnInvolution");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotAnInvolution);
    }
}

TEST_CASE("chern_cocycle_eval examples") {
    std::mt19937 rng(6);
    const ComplexMatrix f = random_involution(rng, 4);
    const Element one = as_element(identity(4));
    CHECK(std::abs(chern_cocycle_eval(f, std::nullopt, 1, {one, one})) < 1e-12);
    CHECK(std::abs(chern_cocycle_eval(f, std::nullopt, 3, {one, one, one, one})) < 1e-12);

    // gamma = sigma_z, F = sigma_x, a = diag(1,0): [F,a]^2 = -1, so the product is -diag(1,0)
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 0) = 1.0;
    const Element e = as_element(a);
    CHECK(std::abs(chern_cocycle_eval(pauli_x(), pauli_z(), 2, {e, e, e}) - cplx(-0.5)) < 1e-14);
    CHECK(std::abs(chern_cocycle_eval(pauli_x(), pauli_z(), 0, {e}) - 1.0) < 1e-14);

    try {
        chern_cocycle_eval(pauli_x(), pauli_z(), 1, {e, e});
        FAIL("expected ParityMismatch");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::ParityMismatch);
    }
}

TEST_CASE("chern pairing on the circle shift") {
    const SpectralTriple c = circle_triple(16, {});
    // the doubling mass enters the truncated value at order mu^2
    const SpectralTriple d = double_triple(c, 0.01);
    const ComplexMatrix f = sign_phase(eig_hermitian(d.D));
    IndexClass u = circle_winding_class(c, 1);
    u.x = double_element(u.x, c.dim());
    const cplx v = pair(chern_cocycle(f, std::nullopt, 1, d.trace_weight), chern_class_tensor(u, 1, d.boundary_band));
    CHECK(std::abs(v - std::sqrt(cplx(0.0, 2.0 * kPi))) < 1e-6);

    // F is unchanged by D -> 2D, hence so is every value
    const ComplexMatrix f2 = sign_phase(eig_hermitian(2.0 * d.D));
    const cplx v2 = pair(chern_cocycle(f2, std::nullopt, 1, d.trace_weight), chern_class_tensor(u, 1, d.boundary_band));
    CHECK(std::abs(v - v2) < 1e-10);
}

TEST_CASE("chern_class_tensor") {
    const SpectralTriple m = moyal_triple(6, 2.0);
    const IndexClass e = moyal_mode_class(m, {0});
    const ChainTensor c0 = chern_class_tensor(e, 0);
    REQUIRE(c0.terms.size() == 1);
    CHECK(c0.terms[0].first == cplx(1.0));
    CHECK(max_abs(c0.terms[0].second[0].a - e.x.a) == 0.0);

    const ChainTensor c2 = chern_class_tensor(e, 2);
    CHECK(c2.terms[0].first == cplx(-2.0));
    CHECK(c2.terms[0].second.size() == 3);
    CHECK(std::abs(c2.terms[0].second[0].c - (e.x.c - 0.5)) < 1e-15);

    const SpectralTriple c = circle_triple(8, {});
    const IndexClass u = circle_winding_class(c, 1);
    const ChainTensor c1 = chern_class_tensor(u, 1, c.boundary_band);
    CHECK(c1.terms[0].first == cplx(1.0));
    REQUIRE(c1.terms[0].second.size() == 2);
    CHECK(max_abs(c1.terms[0].second[0].a - u.x.a.adjoint()) == 0.0);
    CHECK(max_abs(c1.terms[0].second[1].a - u.x.a) == 0.0);
    CHECK(chern_class_tensor(u, 3, c.boundary_band).terms[0].first == cplx(-1.0));

    IndexClass bad = e;
    bad.x.a *= 2.0;
    try {
        chern_class_tensor(bad, 2);
        FAIL("expected NotIdempotent");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::NotIdempotent);
    }
    IndexClass badu = u;
    badu.x.a *= 2.0;
    try {
        chern_class_tensor(badu, 1, c.boundary_band);
        FAIL("expected NotUnitary");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::NotUnitary);
    }
}

TEST_CASE("the Chern cochain is a Hochschild cocycle") {
    const SpectralTriple c = circle_triple(8, {});
    const ComplexMatrix f = sign_phase(eig_hermitian(c.D));
    const ComplexMatrix u = circle_symbol_matrix(8, {{1, 1.0}});
    const ComplexMatrix v = circle_symbol_matrix(8, {{-2, cplx(0.5, 0.2)}, {1, 0.3}});
    const Tuple a{as_element(u), as_element(v), as_element(u.adjoint())};
    CHECK(std::abs(hochschild_b(chern_cocycle(f, std::nullopt, 1))(a)) < 1e-8);

    const SpectralTriple m = moyal_triple(4, 2.0);
    const ComplexMatrix fm = sign_phase(eig_hermitian(m.D));
    std::vector<Element> g;
    for (const auto& gen : m.generators) g.push_back(as_element(gen.op));
    REQUIRE(g.size() >= 2);
    const Tuple b{g[0], g[1], g[0], g[1]};
    CHECK(std::abs(hochschild_b(chern_cocycle(fm, *m.grading, 2))(b)) < 1e-8);
}

}  // TEST_SUITE
