#include "ncindex/models.hpp"

#include <Eigen/Sparse>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ncindex {

const char* to_string(Parity p) { return p == Parity::Even ? "even" : "odd"; }

ComplexMatrix Element::full() const { return a + c * identity(a.rows()); }

Element operator*(const Element& x, const Element& y) {
    return {mul(x.a, y.a) + x.c * y.a + y.c * x.a, x.c * y.c};
}
Element operator+(const Element& x, const Element& y) { return {x.a + y.a, x.c + y.c}; }
Element operator*(cplx s, const Element& x) { return {s * x.a, s * x.c}; }

ComplexMatrix SpectralTriple::gamma_or_identity() const {
    return grading ? *grading : identity(dim());
}

int boundary_width(int N) { return (N + 3) / 4; }

TripleDiagnostics validate_triple(const SpectralTriple& t, double tol) {
    using SparseC = Eigen::SparseMatrix<cplx>;
    auto sp = [](const ComplexMatrix& m) -> SparseC { return m.sparseView(cplx(0.0), 0.0); };
    auto sup = [](const SparseC& x) {
        double r = 0.0;
        for (int k = 0; k < x.outerSize(); ++k)
            for (SparseC::InnerIterator it(x, k); it; ++it) r = std::max(r, std::abs(it.value()));
        return r;
    };
    TripleDiagnostics d;
    const double scale = std::max(1.0, max_abs(t.D));
    if (!is_hermitian(t.D, tol)) fail(ErrorKind::ValidationFailure, t.kind + ": D is not Hermitian");
    // Every shipped operator is sparse, so the identities are checked in sparse form.
    const SparseC D = sp(t.D);
    if (t.grading) {
        require_same_shape(*t.grading, t.D, "validate_triple");
        const SparseC g = sp(*t.grading);
        SparseC id(g.rows(), g.cols());
        id.setIdentity();
        const double herm = sup(g - SparseC(g.adjoint()));
        const double inv = sup(SparseC(g * g) - id);
        const double anti = sup(SparseC(g * D) + SparseC(D * g)) / scale;
        double comm = 0.0;
        for (const auto& gen : t.generators) {
            const SparseC x = sp(gen.op);
            comm = std::max(comm, sup(SparseC(g * x) - SparseC(x * g)));
        }
        d.grading_defect = std::max({herm, inv, anti, comm});
        if (d.grading_defect > tol) {
            std::ostringstream os;
            os << t.kind << ": grading identities fail (defect " << d.grading_defect << ")";
            fail(ErrorKind::ValidationFailure, os.str());
        }
    }
    for (const auto& gen : t.generators) {
        const SparseC x = sp(gen.op);
        const SparseC c = SparseC(D * x) - SparseC(x * D);
        d.max_commutator_norm = std::max(d.max_commutator_norm, spectral_norm(ComplexMatrix(c)));
    }
    return d;
}

ComplexMatrix circle_symbol_matrix(int N, const FourierSymbol& symbol) {
    if (N < 1) fail(ErrorKind::DomainError, "circle_symbol_matrix: N must be positive");
    const int dim = 2 * N + 1;
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (const auto& [j, c] : symbol) {
        if (std::abs(j) > N - 1) {
            std::ostringstream os;
            os << "circle_symbol_matrix: symbol degree " << j << " exceeds N-1 = " << N - 1;
            fail(ErrorKind::DegreeOverflow, os.str());
        }
        // e^{ij theta} maps e_k to e_{k+j}
        for (int k = -N; k <= N; ++k)
            if (k + j >= -N && k + j <= N) m(k + j + N, k + N) += c;
    }
    return m;
}

namespace {

void lattice_band_and_weight(SpectralTriple& t) {
    const int B = boundary_width(t.N);
    const auto& lat = *t.lattice;
    RealVector w = RealVector::Ones(t.dim());
    for (size_t pt = 0; pt < lat.points.size(); ++pt) {
        const int r = std::max(std::abs(lat.points[pt][0]), lat.p == 2 ? std::abs(lat.points[pt][1]) : 0);
        if (r > t.N - B)
            for (int s = 0; s < lat.spinor; ++s) {
                const int idx = int(pt) * lat.spinor + s;
                t.boundary_band.push_back(idx);
                w(idx) = 0.0;
            }
    }
    t.trace_weight = w;
}

}  // namespace

SpectralTriple circle_triple(int N, const std::vector<FourierSymbol>& symbols) {
    int max_deg = 0;
    for (const auto& s : symbols)
        for (const auto& kv : s) max_deg = std::max(max_deg, std::abs(kv.first));
    if (max_deg > N - 1) {
        std::ostringstream os;
        os << "circle_triple: symbol degree " << max_deg << " needs N >= " << max_deg + 2;
        fail(ErrorKind::DegreeOverflow, os.str());
    }
    SpectralTriple t;
    t.kind = "circle";
    t.N = N;
    t.p = 1.0;
    t.parity = Parity::Odd;
    const int dim = 2 * N + 1;
    t.D = ComplexMatrix::Zero(dim, dim);
    LatticeInfo lat;
    lat.p = 1;
    lat.spinor = 1;
    for (int k = -N; k <= N; ++k) {
        t.D(k + N, k + N) = double(k);
        lat.points.push_back({k, 0});
    }
    t.lattice = lat;
    int i = 0;
    for (const auto& s : symbols) t.generators.push_back({"symbol" + std::to_string(i++), circle_symbol_matrix(N, s)});
    if (symbols.empty()) t.generators.push_back({"u", circle_symbol_matrix(N, {{1, 1.0}})});
    lattice_band_and_weight(t);
    t.base_dim = t.dim();
    validate_triple(t);
    return t;
}

SpectralTriple torus_triple(int p, int N, double theta) {
    if (p != 1 && p != 2) fail(ErrorKind::InvalidDimension, "torus_triple: p must be 1 or 2");
    if (N < 2) fail(ErrorKind::DomainError, "torus_triple: N must be at least 2");
    SpectralTriple t;
    t.kind = "torus" + std::to_string(p);
    t.N = N;
    t.p = p;
    LatticeInfo lat;
    lat.p = p;
    lat.spinor = p == 1 ? 1 : 2;
    const int side = 2 * N + 1;
    if (p == 1) {
        t.parity = Parity::Odd;
        t.D = ComplexMatrix::Zero(side, side);
        ComplexMatrix u = ComplexMatrix::Zero(side, side);
        for (int k = -N; k <= N; ++k) {
            lat.points.push_back({k, 0});
            // gamma_1 = -i gives gamma(ik) = k
            t.D(k + N, k + N) = double(k);
            if (k + 1 <= N) u(k + 1 + N, k + N) = 1.0;
        }
        t.generators.push_back({"U", u});
    } else {
        t.parity = Parity::Even;
        const int pts = side * side;
        const int dim = 2 * pts;
        t.D = ComplexMatrix::Zero(dim, dim);
        ComplexMatrix u = ComplexMatrix::Zero(dim, dim), v = ComplexMatrix::Zero(dim, dim);
        ComplexMatrix g = ComplexMatrix::Zero(dim, dim);
        auto pt = [&](int a, int b) { return (a + N) * side + (b + N); };
        for (int a = -N; a <= N; ++a)
            for (int b = -N; b <= N; ++b) {
                lat.points.push_back({a, b});
                const int i = pt(a, b);
                // gamma_j = -i sigma_j gives gamma(in) = n_1 sigma_x + n_2 sigma_y
                t.D(2 * i, 2 * i + 1) = cplx(a, -b);
                t.D(2 * i + 1, 2 * i) = cplx(a, b);
                g(2 * i, 2 * i) = 1.0;
                g(2 * i + 1, 2 * i + 1) = -1.0;
                for (int s = 0; s < 2; ++s) {
                    if (a + 1 <= N) u(2 * pt(a + 1, b) + s, 2 * i + s) = 1.0;
                    if (b + 1 <= N) v(2 * pt(a, b + 1) + s, 2 * i + s) = std::polar(1.0, -2.0 * kPi * theta * a);
                }
            }
        t.grading = g;
        t.generators.push_back({"U", u});
        t.generators.push_back({"V", v});
    }
    t.lattice = lat;
    lattice_band_and_weight(t);
    t.base_dim = t.dim();
    validate_triple(t);
    return t;
}

namespace {

// Oscillator-space operators for the Moyal model, dimension (N+1)^2.
using SparseC = Eigen::SparseMatrix<cplx>;

struct Oscillator {
    int N;
    double theta;
    int M() const { return N + 1; }
    int at(int m, int n) const { return m * M() + n; }

    SparseC from(const std::vector<Eigen::Triplet<cplx>>& ts) const {
        SparseC x(M() * M(), M() * M());
        x.setFromTriplets(ts.begin(), ts.end());
        return x;
    }
    // a * f_{m,n} = sqrt(theta m) f_{m-1,n}
    SparseC left_a() const {
        std::vector<Eigen::Triplet<cplx>> ts;
        for (int m = 1; m <= N; ++m)
            for (int n = 0; n <= N; ++n) ts.emplace_back(at(m - 1, n), at(m, n), std::sqrt(theta * m));
        return from(ts);
    }
    // f_{m,n} * a = sqrt(theta (n+1)) f_{m,n+1}
    SparseC right_a() const {
        std::vector<Eigen::Triplet<cplx>> ts;
        for (int m = 0; m <= N; ++m)
            for (int n = 0; n < N; ++n) ts.emplace_back(at(m, n + 1), at(m, n), std::sqrt(theta * (n + 1)));
        return from(ts);
    }
    SparseC left(int m, int n) const {
        std::vector<Eigen::Triplet<cplx>> ts;
        if (m >= 0 && n >= 0 && m <= N && n <= N)
            for (int l = 0; l <= N; ++l) ts.emplace_back(at(m, l), at(n, l), 1.0);
        return from(ts);
    }
};

double sparse_max_abs(const SparseC& x) {
    double r = 0.0;
    for (int k = 0; k < x.outerSize(); ++k)
        for (SparseC::InnerIterator it(x, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

ComplexMatrix spin_diag(const ComplexMatrix& x) {
    const Eigen::Index k = x.rows();
    ComplexMatrix out = ComplexMatrix::Zero(2 * k, 2 * k);
    out.topLeftCorner(k, k) = x;
    out.bottomRightCorner(k, k) = x;
    return out;
}

}  // namespace

SpectralTriple moyal_triple(int N, double theta) {
    if (!(theta > 0.0)) fail(ErrorKind::InvalidTheta, "moyal_triple: theta must be positive");
    if (N < 4) fail(ErrorKind::DomainError, "moyal_triple: N must be at least 4");
    Oscillator osc{N, theta};
    const int k = osc.M() * osc.M();

    // With [x_1, x_2] = i theta the star commutators give [a, f] = theta 2^{-1/2}(d_1 + i d_2) f,
    // hence i d_1 - d_2 = (i sqrt 2 / theta)(L(a) - R(a)).
    const SparseC A = cplx(0.0, std::sqrt(2.0) / theta) * (osc.left_a() - osc.right_a());
    const SparseC Ad = A.adjoint();

    // Mandatory check against the closed-form commutator on interior modes.
    std::set<int> picks = {0, 1, 2, N / 2, N - 2};
    const cplx pref(0.0, -std::sqrt(2.0 / theta));
    double err_plus = 0.0, err_minus = 0.0, ref = 0.0;
    for (int m : picks)
        for (int n : picks) {
            const SparseC L = osc.left(m, n);
            const SparseC up = SparseC(A * L) - SparseC(L * A);
            const SparseC lo = SparseC(Ad * L) - SparseC(L * Ad);
            const SparseC want_up =
                pref * (std::sqrt(double(m)) * osc.left(m - 1, n) - std::sqrt(double(n + 1)) * osc.left(m, n + 1));
            const SparseC want_lo =
                pref * (std::sqrt(double(n)) * osc.left(m, n - 1) - std::sqrt(double(m + 1)) * osc.left(m + 1, n));
            err_plus = std::max({err_plus, sparse_max_abs(up - want_up), sparse_max_abs(lo - want_lo)});
            err_minus = std::max({err_minus, sparse_max_abs(up + want_up), sparse_max_abs(lo + want_lo)});
            ref = std::max(ref, sparse_max_abs(want_up));
        }
    int sign = 0;
    if (err_plus <= 1e-9 * ref) sign = 1;
    else if (err_minus <= 1e-9 * ref) sign = -1;
    if (sign == 0) {
        std::ostringstream os;
        os << "moyal_triple: derived Dirac matrix fails the commutator check (errors " << err_plus << ", "
           << err_minus << ")";
        fail(ErrorKind::ValidationFailure, os.str());
    }

    SpectralTriple t;
    t.kind = "moyal";
    t.N = N;
    t.p = 2.0;
    t.parity = Parity::Even;
    t.D = ComplexMatrix::Zero(2 * k, 2 * k);
    t.D.topRightCorner(k, k) = double(sign) * ComplexMatrix(A);
    t.D.bottomLeftCorner(k, k) = double(sign) * ComplexMatrix(Ad);
    ComplexMatrix g = ComplexMatrix::Zero(2 * k, 2 * k);
    g.topLeftCorner(k, k).setIdentity();
    g.bottomRightCorner(k, k) = -ComplexMatrix::Identity(k, k);
    t.grading = g;
    MoyalInfo info;
    info.theta = theta;
    info.convention_sign = sign;
    t.moyal = info;

    const int B = boundary_width(N);
    RealVector w = RealVector::Ones(2 * k);
    for (int s = 0; s < 2; ++s)
        for (int m = 0; m <= N; ++m)
            for (int n = 0; n <= N; ++n)
                if (m > N - B || n > N - B) {
                    const int idx = info.index(s, m, n, N);
                    t.boundary_band.push_back(idx);
                    w(idx) = 0.0;
                }
    t.trace_weight = w;
    t.generators.push_back({"f00", spin_diag(ComplexMatrix(osc.left(0, 0)))});
    t.generators.push_back({"f10", spin_diag(ComplexMatrix(osc.left(1, 0)))});
    t.base_dim = t.dim();
    validate_triple(t);
    return t;
}

ComplexMatrix moyal_left(const SpectralTriple& t, const std::vector<MoyalCoefficient>& f) {
    if (!t.moyal) fail(ErrorKind::UnknownModel, "moyal_left: triple is not a Moyal model");
    const int N = t.N, M = N + 1, k = M * M;
    ComplexMatrix out = ComplexMatrix::Zero(t.dim(), t.dim());
    for (const auto& term : f) {
        if (term.m < 0 || term.n < 0 || term.m > N || term.n > N)
            fail(ErrorKind::DomainError, "moyal_left: mode outside truncation");
        for (int s = 0; s < 2; ++s)
            for (int l = 0; l <= N; ++l) out(s * k + term.m * M + l, s * k + term.n * M + l) += term.c;
    }
    if (t.doubled) fail(ErrorKind::DomainError, "moyal_left: build on the base triple, then double");
    return out;
}

ComplexMatrix moyal_projection(const SpectralTriple& t, const std::vector<int>& modes) {
    std::vector<MoyalCoefficient> f;
    for (int j : modes) f.push_back({j, j, 1.0});
    return moyal_left(t, f);
}

PlaneProfile::PlaneProfile(double theta) : theta_(theta) {
    if (!(theta > 0.0)) fail(ErrorKind::InvalidTheta, "PlaneProfile: theta must be positive");
}

cplx PlaneProfile::integral(const ComplexMatrix& g) const { return 2.0 * kPi * theta_ * g.trace(); }

double PlaneProfile::radial_integral(const std::function<double(double)>& g) {
    // d^2 xi = pi d(1+|xi|^2)
    boost::math::quadrature::exp_sinh<double> integrator;
    return kPi * integrator.integrate([&](double u) { return g(1.0 + u); });
}

cplx PlaneProfile::power_trace(cplx integral_f, cplx trace_s, cplx w) const {
    // (2 pi)^{-2} int f * tr S * int (1+|xi|^2)^{-w} dxi, the last factor being pi/(w-1)
    if (std::abs(w - 1.0) < 1e-14) fail(ErrorKind::PoleError, "PlaneProfile: pole at w = 1");
    return trace_s * integral_f / (4.0 * kPi * (w - 1.0));
}

cplx PlaneProfile::value(const ComplexMatrix& g, double s) const { return power_trace(integral(g), 2.0, s / 2.0); }

ZetaModel PlaneProfile::zeta_model(cplx integral_f_trace_s, double w0) const {
    const cplx c = integral_f_trace_s;
    auto f = [c, w0](cplx z) { return c / (4.0 * kPi * (w0 + z - 1.0)); };
    return meromorphic_model(f, {{cplx(1.0 - w0, 0.0), 1}}, "plane-profile");
}

PlaneProfile plane_radial_profile(double theta) { return PlaneProfile(theta); }

std::array<ComplexMatrix, 4> moyal_left_blocks(const SpectralTriple& t, const ComplexMatrix& op, int n0) {
    if (!t.moyal) fail(ErrorKind::UnknownModel, "moyal_left_blocks: triple is not a Moyal model");
    const int N = t.N, M = N + 1;
    if (n0 < 0 || n0 > N) fail(ErrorKind::DomainError, "moyal_left_blocks: n0 outside truncation");
    require_same_shape(op, t.D, "moyal_left_blocks");
    std::array<ComplexMatrix, 4> out;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            ComplexMatrix g(M, M);
            for (int m = 0; m < M; ++m)
                for (int mp = 0; mp < M; ++mp)
                    g(m, mp) = op(t.moyal->index(a, m, n0, N), t.moyal->index(b, mp, n0, N));
            out[size_t(2 * a + b)] = g;
        }
    return out;
}

double moyal_left_defect(const SpectralTriple& t, const ComplexMatrix& op, int n0, int n1) {
    const auto x = moyal_left_blocks(t, op, n0), y = moyal_left_blocks(t, op, n1);
    double d = 0.0;
    for (size_t i = 0; i < 4; ++i) d = std::max(d, max_abs(x[i] - y[i]));
    return d;
}

SpectralTriple double_triple(const SpectralTriple& t, double mu) {
    if (!(mu > 0.0)) fail(ErrorKind::InvalidMu, "double_triple: mu must be positive");
    const Eigen::Index n = t.dim();
    SpectralTriple d = t;
    d.kind = t.kind + "-double";
    d.doubled = true;
    d.mu = mu;
    d.base_dim = n;
    d.D = ComplexMatrix::Zero(2 * n, 2 * n);
    d.D.topLeftCorner(n, n) = t.D;
    d.D.bottomRightCorner(n, n) = -t.D;
    d.D.topRightCorner(n, n) = mu * ComplexMatrix::Identity(n, n);
    d.D.bottomLeftCorner(n, n) = mu * ComplexMatrix::Identity(n, n);
    if (t.grading) {
        ComplexMatrix g = ComplexMatrix::Zero(2 * n, 2 * n);
        g.topLeftCorner(n, n) = *t.grading;
        g.bottomRightCorner(n, n) = -*t.grading;
        d.grading = g;
    }
    if (t.trace_weight) {
        RealVector w(2 * n);
        w << *t.trace_weight, *t.trace_weight;
        d.trace_weight = w;
    }
    d.boundary_band.clear();
    for (int i : t.boundary_band) d.boundary_band.push_back(i);
    for (int i : t.boundary_band) d.boundary_band.push_back(i + int(n));
    d.generators.clear();
    for (const auto& g : t.generators) {
        ComplexMatrix x = ComplexMatrix::Zero(2 * n, 2 * n);
        x.topLeftCorner(n, n) = g.op;
        d.generators.push_back({g.name, x});
    }
    if (n <= 2000) {
        // D_mu^2 = (mu^2 + D^2) on both copies
        const ComplexMatrix d2 = mul(d.D, d.D);
        const ComplexMatrix base = mul(t.D, t.D) + mu * mu * ComplexMatrix::Identity(n, n);
        double err = max_abs(d2.topLeftCorner(n, n) - base) + max_abs(d2.bottomRightCorner(n, n) - base) +
                     max_abs(d2.topRightCorner(n, n)) + max_abs(d2.bottomLeftCorner(n, n));
        if (err > 1e-10 * std::max(1.0, max_abs(base)))
            fail(ErrorKind::ValidationFailure, "double_triple: D_mu^2 is not diagonal in the doubling");
    }
    validate_triple(d);
    return d;
}

Element double_element(const Element& x, Eigen::Index base_dim) {
    if (x.a.rows() != base_dim) fail(ErrorKind::ShapeMismatch, "double_element: element size differs from base");
    ComplexMatrix a = ComplexMatrix::Zero(2 * base_dim, 2 * base_dim);
    a.topLeftCorner(base_dim, base_dim) = x.a;
    return {a, x.c};
}

namespace {

double zero_threshold(const HermEig& eig) {
    double top = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) top = std::max(top, std::abs(eig.values(i)));
    return 1e-10 * std::max(1.0, top);
}

}  // namespace

PhaseProjection phase_and_projection(const HermEig& eig, double eps) {
    if (eps < 0.0) fail(ErrorKind::DomainError, "phase_and_projection: eps must be nonnegative");
    const double z = zero_threshold(eig);
    if (eps == 0.0)
        for (Eigen::Index i = 0; i < eig.values.size(); ++i)
            if (std::abs(eig.values(i)) <= z)
                fail(ErrorKind::SingularPhase, "phase_and_projection: eps = 0 with zero in the spectrum");
    PhaseProjection out;
    out.F = apply_function([eps](double x) { return x / std::sqrt(eps + x * x); }, eig);
    out.P = apply_function([z](double x) { return x >= -z ? 1.0 : 0.0; }, eig);
    return out;
}

PhaseProjection phase_and_projection(const ComplexMatrix& d, double eps) {
    return phase_and_projection(eig_hermitian(d), eps);
}

ComplexMatrix sign_phase(const HermEig& eig) {
    const double z = zero_threshold(eig);
    return apply_function([z](double x) { return x >= -z ? 1.0 : -1.0; }, eig);
}

IndexClass circle_winding_class(const SpectralTriple& t, int w) {
    if (!t.lattice || t.lattice->p != 1 || t.doubled)
        fail(ErrorKind::UnknownClass, "winding classes live on undoubled one-dimensional lattice models");
    if (std::abs(w) > t.N - 1) fail(ErrorKind::DegreeOverflow, "circle_winding_class: |w| exceeds N-1");
    const ComplexMatrix u = circle_symbol_matrix(t.N, {{w, 1.0}});
    IndexClass c;
    c.name = "winding=" + std::to_string(w);
    c.kind = ClassKind::Unitary;
    c.x = {u - identity(u.rows()), 1.0};
    return c;
}

IndexClass moyal_mode_class(const SpectralTriple& t, const std::vector<int>& modes) {
    if (!t.moyal || t.doubled) fail(ErrorKind::UnknownClass, "mode projections live on undoubled Moyal models");
    std::set<int> seen;
    std::ostringstream name;
    name << "modes={";
    for (size_t i = 0; i < modes.size(); ++i) {
        if (!seen.insert(modes[i]).second) fail(ErrorKind::UnknownClass, "moyal_mode_class: repeated mode");
        if (modes[i] < 0 || modes[i] > t.N - boundary_width(t.N))
            fail(ErrorKind::UnknownClass, "moyal_mode_class: mode must lie below the boundary band");
        name << (i ? "," : "") << modes[i];
    }
    name << "}";
    IndexClass c;
    c.name = name.str();
    c.kind = ClassKind::Projection;
    c.x = {moyal_projection(t, modes), 0.0};
    return c;
}

IndexClass scalar_projection_class(const SpectralTriple& t) {
    IndexClass c;
    c.name = "scalar-unit";
    c.kind = ClassKind::Projection;
    c.x = {ComplexMatrix::Zero(t.dim(), t.dim()), 1.0};
    return c;
}

IndexClass identity_unitary_class(const SpectralTriple& t) {
    IndexClass c;
    c.name = "identity";
    c.kind = ClassKind::Unitary;
    c.x = {ComplexMatrix::Zero(t.dim(), t.dim()), 1.0};
    return c;
}

namespace bott {

Eigen::Matrix2cd projector(cplx z) {
    const double r2 = std::norm(z);
    Eigen::Matrix2cd p;
    p << 1.0, std::conj(z), z, r2;
    return p / (1.0 + r2);
}

Eigen::Matrix4cd density(cplx z) {
    const double r2 = std::norm(z);
    const double q = 1.0 / ((1.0 + r2) * (1.0 + r2));
    const cplx zb = std::conj(z);
    // Wirtinger derivatives of the projector entries
    Eigen::Matrix2cd dz, dzb;
    dz << -zb * q, -zb * zb * q, q, zb * q;
    dzb << -z * q, q, -z * z * q, z * q;
    // d_1 + i d_2 = 2 d_zbar and -d_1 + i d_2 = -2 d_z
    Eigen::Matrix4cd c = Eigen::Matrix4cd::Zero();
    c.block<2, 2>(0, 2) = 2.0 * dzb;
    c.block<2, 2>(2, 0) = -2.0 * dz;
    Eigen::Matrix4cd ph = Eigen::Matrix4cd::Zero();
    const Eigen::Matrix2cd pm = projector(z) - 0.5 * Eigen::Matrix2cd::Identity();
    ph.block<2, 2>(0, 0) = pm;
    ph.block<2, 2>(2, 2) = pm;
    return ph * c * c;
}

Eigen::Matrix4cd density_closed_form(cplx z) {
    const double r2 = std::norm(z);
    const cplx zb = std::conj(z);
    Eigen::Matrix4cd m;
    m << 0.5, zb / 2.0, 0.0, 0.0, z / 2.0, r2 / 2.0, 0.0, 0.0, 0.0, 0.0, -r2 / 2.0, zb / 2.0, 0.0, 0.0, z / 2.0,
        -0.5;
    return m * (-4.0 / std::pow(1.0 + r2, 3));
}

Assembly assemble() {
    Assembly out;
    boost::math::quadrature::exp_sinh<double> integrator;
    out.radial = integrator.integrate([](double r) { return r / ((1.0 + r * r) * (1.0 + r * r)); });
    // Angular trapezoid is exact to rounding for this smooth periodic integrand.
    constexpr int kAngles = 16;
    auto graded_trace = [](cplx z) {
        const Eigen::Matrix4cd m = density(z);
        return (m(0, 0) + m(1, 1) - m(2, 2) - m(3, 3)).real();
    };
    out.fibre_integral = integrator.integrate([&](double r) {
        double acc = 0.0;
        for (int j = 0; j < kAngles; ++j) acc += graded_trace(std::polar(r, 2.0 * kPi * j / kAngles));
        return 2.0 * kPi * r * acc / kAngles;
    });
    const ZetaModel zeta = PlaneProfile(1.0).zeta_model(out.fibre_integral, 1.0);
    out.residue = 0.5 * tau_l(zeta, 0);
    out.index = -2.0 * out.residue;
    return out;
}

}  // namespace bott

}  // namespace ncindex
