#include "ncindex/indexengines.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "ncindex/psido.hpp"

namespace ncindex {

namespace {

using boost::multiprecision::cpp_rational;

std::vector<cpp_rational> sigma_poly_exact(int n, Parity parity) {
    std::vector<cpp_rational> c{cpp_rational(1)};
    for (int j = 0; j < n; ++j) {
        const cpp_rational shift = parity == Parity::Odd ? cpp_rational(2 * j + 1, 2) : cpp_rational(j);
        std::vector<cpp_rational> next(c.size() + 1, cpp_rational(0));
        for (size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] += c[i] * shift;
        }
        c = std::move(next);
    }
    return c;
}

}  // namespace

int residue_degree_bound(double p, Parity parity) {
    const int bullet = parity == Parity::Odd ? 1 : 0;
    return 2 * int(std::floor((p + bullet + 1.0) / 2.0)) - bullet;
}

double alpha_k(const std::vector<int>& k) {
    double inv = 1.0;
    int partial = 0;
    for (size_t i = 0; i < k.size(); ++i) {
        if (k[i] < 0) fail(ErrorKind::DomainError, "alpha_k: negative entry");
        inv *= std::tgamma(k[i] + 1.0);
        partial += k[i] + 1;
        inv *= partial;
    }
    return 1.0 / inv;
}

double sigma_nl(int n, int l, Parity parity) {
    if (n < 0 || l < 0 || l > n) return 0.0;
    std::vector<double> c{1.0};
    for (int j = 0; j < n; ++j) {
        const double shift = parity == Parity::Odd ? j + 0.5 : double(j);
        std::vector<double> next(c.size() + 1, 0.0);
        for (size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] += c[i] * shift;
        }
        c = std::move(next);
    }
    return c[size_t(l)];
}

std::string sigma_nl_exact(int n, int l, Parity parity) {
    if (n < 0 || l < 0 || l > n) return "0/1";
    const auto c = sigma_poly_exact(n, parity);
    const cpp_rational& v = c[size_t(l)];
    return boost::multiprecision::numerator(v).str() + "/" + boost::multiprecision::denominator(v).str();
}

cplx eta_m(int m, Parity parity) {
    cplx c = std::pow(2.0, m + 1) * std::tgamma(m / 2.0 + 1.0) / std::tgamma(m + 1.0);
    if (parity == Parity::Odd) c *= -std::sqrt(cplx(0.0, 2.0));
    return c;
}

ResidueConstants residue_constants(double p, Parity parity) {
    if (p < 1.0) fail(ErrorKind::DomainError, "residue_constants: p must be at least 1");
    ResidueConstants rc;
    rc.p = p;
    rc.parity = parity;
    rc.M = residue_degree_bound(p, parity);
    const int bullet = parity == Parity::Odd ? 1 : 0;
    for (int m = bullet; m <= rc.M; m += 2) {
        rc.eta[m] = eta_m(m, parity);
        if (m == 0) continue;
        for (const auto& k : multi_indices(m, rc.M - m)) rc.alpha[k] = alpha_k(k);
    }
    for (int n = 0; n <= rc.M + 1; ++n) {
        std::vector<double> row;
        for (int l = 0; l <= n; ++l) row.push_back(sigma_nl(n, l, parity));
        rc.sigma.push_back(row);
    }
    return rc;
}

FredholmResult fredholm_index(const ComplexMatrix& a, const FredholmOptions& opt) {
    if (!(opt.tol > 0.0)) fail(ErrorKind::DomainError, "fredholm_index: tol must be positive");
    require_finite(a, "fredholm_index");
    const Eigen::Index rows = a.rows(), cols = a.cols();
    FredholmResult res;
    Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector& s = svd.singularValues();
    const double top = s.size() ? s(0) : 0.0;
    const double thr = opt.tol * (top > 0.0 ? top : 1.0);
    res.threshold = thr;
    res.gap = kInf;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) >= thr / 10.0 && s(i) < 10.0 * thr) {
            std::ostringstream os;
            os << "fredholm_index: singular value " << s(i) << " within a factor 10 of the threshold " << thr
               << "; raise N";
            fail(ErrorKind::AmbiguousGap, os.str());
        }
        if (s(i) >= thr) {
            ++rank;
            res.gap = std::min(res.gap, s(i));
        }
    }
    res.kernel_raw = int(cols - rank);
    res.cokernel_raw = int(rows - rank);
    res.raw = res.kernel_raw - res.cokernel_raw;

    auto count_interior = [&](const ComplexMatrix& basis, const std::optional<ComplexMatrix>& embed,
                              const std::vector<int>& band) {
        if (basis.cols() == 0) return 0;
        const ComplexMatrix full = embed ? ComplexMatrix(mul(*embed, basis)) : basis;
        ComplexMatrix mass = ComplexMatrix::Zero(basis.cols(), basis.cols());
        for (int i : band) {
            if (i < 0 || i >= full.rows()) continue;
            mass += full.row(i).adjoint() * full.row(i);
        }
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(mass);
        int n = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) < opt.mass_threshold) ++n;
        return n;
    };
    const ComplexMatrix kernel = svd.matrixV().rightCols(cols - rank);
    const ComplexMatrix cokernel = svd.matrixU().rightCols(rows - rank);
    res.kernel_filtered = count_interior(kernel, opt.col_embed, opt.col_band);
    res.cokernel_filtered = count_interior(cokernel, opt.row_embed, opt.row_band);
    res.filtered = res.kernel_filtered - res.cokernel_filtered;
    return res;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::Compression: return "compression";
        case Method::TracePower: return "trace-power";
        case Method::NoDouble: return "no-double";
        case Method::Chern: return "chern";
        case Method::Residue: return "residue";
        case Method::McKeanSinger: return "mckean-singer";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::Compression, Method::TracePower, Method::NoDouble, Method::Chern, Method::Residue,
                     Method::McKeanSinger})
        if (s == to_string(m)) return m;
    fail(ErrorKind::ConfigParseError, "unknown method '" + s +
                                          "' (expected compression, trace-power, no-double, chern, residue or "
                                          "mckean-singer)");
}

void IndexReport::finalize() {
    verdict = !methods.empty();
    bool first = true;
    for (const auto& m : methods) {
        if (!m.ok || !(m.gap < m.gap_tolerance)) {
            verdict = false;
            continue;
        }
        auto it = m.diagnostics.find("imag_residual");
        if (it != m.diagnostics.end() && it->second > 1e-3 * std::max(1.0, std::abs(m.value))) verdict = false;
        if (first) {
            agreed = m.rounded;
            first = false;
        } else if (m.rounded != agreed) {
            verdict = false;
        }
    }
    if (first) agreed = 0;
}

SpectralTriple scaled_triple(const SpectralTriple& t, double lambda) {
    if (!(lambda > 0.0)) fail(ErrorKind::DomainError, "scaled_triple: scale must be positive");
    SpectralTriple s = t;
    s.D *= lambda;
    return s;
}

namespace {

void set_value(MethodResult& r, cplx v) {
    r.value = v;
    r.rounded = std::lround(v.real());
    r.gap = std::abs(v.real() - double(r.rounded));
    r.diagnostics["imag_residual"] = std::abs(v.imag());
    r.ok = true;
}

void require_class_parity(const SpectralTriple& t, const IndexClass& x) {
    const bool odd_class = x.kind == ClassKind::Unitary;
    if (odd_class != (t.parity == Parity::Odd)) {
        std::ostringstream os;
        os << (odd_class ? "unitary" : "projection") << " class '" << x.name << "' on " << to_string(t.parity)
           << " model '" << t.kind << "'";
        fail(ErrorKind::ParityMismatch, os.str());
    }
}

// Orthonormal basis of the range of a Hermitian projection; coordinate
// vectors when the projection is diagonal.
ComplexMatrix range_basis(const ComplexMatrix& q) {
    const Eigen::Index n = q.rows();
    bool diagonal = true;
    for (Eigen::Index j = 0; j < n && diagonal; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != j && q(i, j) != cplx(0.0)) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (q(i, i).real() > 0.5) idx.push_back(i);
        ComplexMatrix b = ComplexMatrix::Zero(n, Eigen::Index(idx.size()));
        for (size_t c = 0; c < idx.size(); ++c) b(idx[c], Eigen::Index(c)) = 1.0;
        return b;
    }
    const HermEig eig = eig_hermitian(q);
    const ComplexMatrix v = eig.vectors();
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
        if (eig.values(i) > 0.5) idx.push_back(i);
    ComplexMatrix b(n, Eigen::Index(idx.size()));
    for (size_t c = 0; c < idx.size(); ++c) b.col(Eigen::Index(c)) = v.col(idx[c]);
    return b;
}

// Columns of the eigenvectors with nonnegative eigenvalue (sign(0) = 1).
ComplexMatrix positive_basis(const HermEig& eig) {
    double top = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) top = std::max(top, std::abs(eig.values(i)));
    const double z = 1e-10 * std::max(1.0, top);
    Eigen::Index count = 0;
    for (const auto& blk : eig.blocks)
        for (Eigen::Index j = 0; j < blk.values.size(); ++j)
            if (blk.values(j) >= -z) ++count;
    ComplexMatrix b = ComplexMatrix::Zero(eig.dim, count);
    Eigen::Index c = 0;
    for (const auto& blk : eig.blocks)
        for (Eigen::Index j = 0; j < blk.values.size(); ++j)
            if (blk.values(j) >= -z) {
                for (size_t a = 0; a < blk.index.size(); ++a) b(blk.index[a], c) = blk.vectors(Eigen::Index(a), j);
                ++c;
            }
    return b;
}

ComplexMatrix compress(const ComplexMatrix& rows_basis, const ComplexMatrix& op, const ComplexMatrix& cols_basis) {
    return mul(rows_basis.adjoint(), mul(op, cols_basis));
}

void record_fredholm(MethodResult& r, const FredholmResult& f) {
    r.diagnostics["raw_index"] = f.raw;
    r.diagnostics["kernel_raw"] = f.kernel_raw;
    r.diagnostics["cokernel_raw"] = f.cokernel_raw;
    r.diagnostics["kernel_filtered"] = f.kernel_filtered;
    r.diagnostics["cokernel_filtered"] = f.cokernel_filtered;
    r.diagnostics["singular_gap"] = f.gap;
    set_value(r, double(f.filtered));
}

int trace_power_exponent(double p) {
    const int fp = int(std::floor(p));
    return fp % 2 ? (fp + 1) / 2 : fp / 2 + 1;
}

ComplexMatrix matrix_power(const ComplexMatrix& a, int n) {
    ComplexMatrix out = a;
    for (int i = 1; i < n; ++i) out = mul(out, a);
    return out;
}

IndexClass doubled_class(const IndexClass& x, Eigen::Index base_dim) {
    IndexClass d = x;
    d.x = double_element(x.x, base_dim);
    return d;
}

MethodResult odd_pairing(const SpectralTriple& t, const IndexClass& x, Method mode, const PairingOptions& opt) {
    MethodResult r;
    r.method = to_string(mode);
    const SpectralTriple ts = scaled_triple(t, opt.scale);
    FredholmOptions fo;
    fo.tol = opt.tol;
    fo.mass_threshold = opt.mass_threshold;
    if (mode == Method::NoDouble) {
        const HermEig eig = eig_hermitian(ts.D);
        const ComplexMatrix pb = positive_basis(eig);
        const ComplexMatrix u = x.x.full();
        fo.row_band = fo.col_band = ts.boundary_band;
        fo.row_embed = fo.col_embed = pb;
        record_fredholm(r, fredholm_index(compress(pb, u, pb), fo));
        return r;
    }
    const double mu = opt.mu.value_or(kDefaultMu);
    const SpectralTriple d = double_triple(ts, mu);
    const HermEig eig = eig_hermitian(d.D);
    const ComplexMatrix uh = double_element(x.x, ts.dim()).full();
    r.diagnostics["mu"] = mu;
    if (mode == Method::Compression) {
        const ComplexMatrix pb = positive_basis(eig);
        fo.row_band = fo.col_band = d.boundary_band;
        fo.row_embed = fo.col_embed = pb;
        record_fredholm(r, fredholm_index(compress(pb, uh, pb), fo));
        return r;
    }
    const ComplexMatrix f = sign_phase(eig);
    if (mode == Method::TracePower) {
        const ComplexMatrix p = 0.5 * (f + identity(f.rows()));
        const ComplexMatrix ud = uh.adjoint();
        const ComplexMatrix t1 = p - mul(mul(p, ud), mul(p, mul(uh, p)));
        const ComplexMatrix t2 = p - mul(mul(p, uh), mul(p, mul(ud, p)));
        const int n = trace_power_exponent(t.p);
        r.diagnostics["power"] = n;
        set_value(r, weighted_trace(matrix_power(t1, n), d.trace_weight) -
                         weighted_trace(matrix_power(t2, n), d.trace_weight));
        return r;
    }
    // Chern pairing in degree floor(p) (or the next odd integer)
    int n = int(std::floor(t.p));
    if (n % 2 == 0) ++n;
    const Cochain ch = chern_cocycle(f, std::nullopt, n, d.trace_weight);
    const ChainTensor c = chern_class_tensor(doubled_class(x, ts.dim()), n, d.boundary_band);
    set_value(r, -pair(ch, c) / std::sqrt(cplx(0.0, 2.0 * kPi)));
    return r;
}

MethodResult even_pairing(const SpectralTriple& t, const IndexClass& x, Method mode, const PairingOptions& opt) {
    MethodResult r;
    r.method = to_string(mode);
    if (mode == Method::NoDouble)
        fail(ErrorKind::ParityMismatch, "no-double compression is defined for odd classes only");
    const SpectralTriple ts = scaled_triple(t, opt.scale);
    const bool doubled = opt.mu.has_value() || mode != Method::Compression;
    ComplexMatrix f, gamma;
    Element e;
    std::vector<int> band;
    TraceWeight w;
    if (doubled) {
        const double mu = opt.mu.value_or(kDefaultMu);
        const SpectralTriple d = double_triple(ts, mu);
        f = sign_phase(eig_hermitian(d.D));
        gamma = *d.grading;
        e = double_element(x.x, ts.dim());
        band = d.boundary_band;
        w = d.trace_weight;
        r.diagnostics["mu"] = mu;
    } else {
        f = phase_and_projection(ts.D, opt.eps).F;
        gamma = *ts.grading;
        e = x.x;
        band = ts.boundary_band;
        w = ts.trace_weight;
        r.diagnostics["eps"] = opt.eps;
    }
    const Eigen::Index n = f.rows();
    const Element unit_e{ComplexMatrix::Zero(n, n), e.c};

    if (mode == Method::Compression) {
        auto index_of = [&](const Element& el, MethodResult* rec) {
            const ComplexMatrix ef = el.full();
            const ComplexMatrix half_plus = 0.5 * (identity(n) + gamma), half_minus = 0.5 * (identity(n) - gamma);
            const ComplexMatrix bp = range_basis(mul(ef, half_plus)), bm = range_basis(mul(ef, half_minus));
            FredholmOptions fo;
            fo.tol = opt.tol;
            fo.mass_threshold = opt.mass_threshold;
            fo.row_band = fo.col_band = band;
            fo.row_embed = bm;
            fo.col_embed = bp;
            const FredholmResult fr = fredholm_index(compress(bm, f, bp), fo);
            if (rec) record_fredholm(*rec, fr);
            return fr.filtered;
        };
        int value = index_of(e, &r);
        if (e.c != cplx(0.0)) {
            value -= index_of(unit_e, nullptr);
            set_value(r, double(value));
        }
        return r;
    }
    if (mode == Method::TracePower) {
        const int pw = trace_power_exponent(t.p);
        auto super = [&](const Element& el) {
            const ComplexMatrix ef = el.full();
            const ComplexMatrix tt = mul(ef, mul(f, ef));
            return weighted_trace(mul(gamma, matrix_power(ef - mul(tt, tt), pw)), w);
        };
        r.diagnostics["power"] = pw;
        cplx v = super(e);
        if (e.c != cplx(0.0)) v -= super(unit_e);
        set_value(r, v);
        return r;
    }
    const int deg = int(std::floor(t.p)) % 2 ? int(std::floor(t.p)) + 1 : int(std::floor(t.p));
    const Cochain ch = chern_cocycle(f, gamma, deg, w);
    IndexClass xe = x;
    xe.x = e;
    IndexClass xu = x;
    xu.x = unit_e;
    set_value(r, pair(ch, chern_class_tensor(xe, deg, band)) - pair(ch, chern_class_tensor(xu, deg, band)));
    return r;
}

}  // namespace

MethodResult pairing_index(const SpectralTriple& t, const IndexClass& x, Method mode, const PairingOptions& opt) {
    require_class_parity(t, x);
    if (opt.mu && !(*opt.mu > 0.0)) fail(ErrorKind::InvalidMu, "pairing_index: mu must be positive");
    if (mode == Method::Residue || mode == Method::McKeanSinger)
        fail(ErrorKind::DomainError, "pairing_index: use residue_index or mckean_singer");
    return t.parity == Parity::Odd ? odd_pairing(t, x, mode, opt) : even_pairing(t, x, mode, opt);
}

namespace {

ZetaModel heat_fallback(const SpectralTriple& t, const ComplexMatrix& b, double w0) {
    const HermEig eig = eig_hermitian(t.D);
    const ComplexMatrix bw = mul(b, apply_function([w0](double x) { return std::pow(1.0 + x * x, -w0); }, eig));
    const HeatTrace ht(bw, eig, t.trace_weight);
    ZetaModel m = heat_trace_fit(ht.sample(log_grid(1e-3, 1e-1, 40)), t.p, 4);
    m.heat = [ht](double s) { return ht(s); };
    return m;
}

}  // namespace

ZetaModel coefficient_zeta(const SpectralTriple& t, const ComplexMatrix& b, double w0) {
    require_same_shape(b, t.D, "coefficient_zeta");
    const int interior = t.N - boundary_width(t.N);
    if (t.lattice && !t.doubled && t.lattice->p == 1) {
        std::vector<int> labels;
        std::vector<cplx> diag;
        for (size_t i = 0; i < t.lattice->points.size(); ++i) {
            labels.push_back(t.lattice->points[i][0]);
            diag.push_back(b(Eigen::Index(i), Eigen::Index(i)));
        }
        return lattice_symbol_model(fit_lattice_symbol(labels, diag, interior, w0));
    }
    if (t.lattice && !t.doubled && t.lattice->p == 2) {
        const int spin = t.lattice->spinor;
        std::vector<cplx> vals;
        for (size_t i = 0; i < t.lattice->points.size(); ++i) {
            const auto& pt = t.lattice->points[i];
            if (std::max(std::abs(pt[0]), std::abs(pt[1])) > interior) continue;
            cplx v = 0.0;
            for (int s = 0; s < spin; ++s) v += b(Eigen::Index(i) * spin + s, Eigen::Index(i) * spin + s);
            vals.push_back(v / double(spin));
        }
        double spread = 0.0, scale = 0.0;
        for (const auto& v : vals) {
            spread = std::max(spread, std::abs(v - vals[0]));
            scale = std::max(scale, std::abs(v));
        }
        if (spread <= 1e-9 * std::max(scale, 1e-300)) return torus_lattice_model(2, vals[0], w0);
        return heat_fallback(t, b, w0);
    }
    if (t.moyal && !t.doubled) {
        const int n1 = std::max(1, interior / 2);
        if (moyal_left_defect(t, b, 0, n1) <= 1e-9 * std::max(1.0, max_abs(b))) {
            const auto blocks = moyal_left_blocks(t, b, 0);
            const PlaneProfile prof(t.moyal->theta);
            const cplx c = prof.integral(blocks[0]) + prof.integral(blocks[3]);
            return prof.zeta_model(c, w0);
        }
    }
    return heat_fallback(t, b, w0);
}

cplx residue_cocycle_component(const SpectralTriple& t, int m, const Tuple& a) {
    const int bullet = t.parity == Parity::Odd ? 1 : 0;
    if (m < 0 || m % 2 != bullet) {
        std::ostringstream os;
        os << "residue_cocycle_component: degree " << m << " on a " << to_string(t.parity) << " model";
        fail(ErrorKind::ParityMismatch, os.str());
    }
    const int M = residue_degree_bound(t.p, t.parity);
    if (m > M) fail(ErrorKind::DomainError, "residue_cocycle_component: degree exceeds M");
    if (int(a.size()) != m + 1) fail(ErrorKind::ShapeMismatch, "residue_cocycle_component: tuple length");
    const ComplexMatrix gamma = t.gamma_or_identity();
    if (m == 0) {
        // degree-0 input enters as a - 1_a
        return tau_l(coefficient_zeta(t, mul(gamma, a[0].a), 0.0), -1);
    }
    std::vector<ComplexMatrix> da;
    for (int i = 1; i <= m; ++i) da.push_back(commutator(t.D, a[size_t(i)].a));
    const ComplexMatrix d2 = mul(t.D, t.D);
    const ComplexMatrix head = mul(gamma, a[0].full());
    cplx total = 0.0;
    for (const auto& k : multi_indices(m, M - m)) {
        int order = 0;
        ComplexMatrix b = head;
        for (int i = 0; i < m; ++i) {
            ComplexMatrix x = da[size_t(i)];
            for (int j = 0; j < k[size_t(i)]; ++j) x = mul(d2, x) - mul(x, d2);
            b = mul(b, x);
            order += k[size_t(i)];
        }
        const int h = order + (m - bullet) / 2;
        const double w0 = order + m / 2.0;
        const ZetaModel z = coefficient_zeta(t, b, w0);
        cplx inner = 0.0;
        for (int l = 1 - bullet; l <= h; ++l) {
            const double sg = sigma_nl(h, l, t.parity);
            if (sg != 0.0) inner += sg * tau_l(z, l - 1 + bullet);
        }
        total += (order % 2 ? -1.0 : 1.0) * alpha_k(k) * inner;
    }
    if (bullet) total *= std::sqrt(cplx(0.0, 2.0 * kPi));
    return total;
}

MethodResult residue_index(const SpectralTriple& t, const IndexClass& x) {
    require_class_parity(t, x);
    MethodResult r;
    r.method = to_string(Method::Residue);
    r.gap_tolerance = 0.3;
    const int bullet = t.parity == Parity::Odd ? 1 : 0;
    const int M = residue_degree_bound(t.p, t.parity);
    cplx total = 0.0;
    for (int m = bullet; m <= M; m += 2) {
        Cochain phi;
        phi.arity = m;
        phi.parity = t.parity;
        phi.eval = [&t, m](const Tuple& a) { return residue_cocycle_component(t, m, a); };
        cplx part = pair(phi, chern_class_tensor(x, m, t.boundary_band));
        if (!bullet && x.x.c != cplx(0.0)) {
            IndexClass unit = x;
            unit.x = {ComplexMatrix::Zero(x.x.a.rows(), x.x.a.cols()), x.x.c};
            part -= pair(phi, chern_class_tensor(unit, m));
        }
        r.diagnostics["phi_" + std::to_string(m)] = part.real();
        total += part;
    }
    if (bullet) total *= -1.0 / std::sqrt(cplx(0.0, 2.0 * kPi));
    set_value(r, total);
    return r;
}

ResolventContext::ResolventContext(const SpectralTriple& t, double a) : t_(t) {
    const HermEig eig = eig_hermitian(t.D);
    dim_ = t.dim();
    v_ = eig.vectors();
    gamma_ = t.grading ? ComplexMatrix(v_.adjoint() * (*t.grading) * v_) : identity(dim_);
    d2_ = eig.values.cwiseProduct(eig.values);
    mu2_ = d2_.minCoeff();
    if (!(mu2_ > 1e-12))
        fail(ErrorKind::ContourViolation, "ResolventContext: D is not invertible; use the doubled triple");
    a_ = a > 0.0 ? a : mu2_ / 4.0;
    if (!(a_ > 0.0 && a_ < mu2_ / 2.0)) {
        std::ostringstream os;
        os << "ResolventContext: abscissa " << a_ << " outside (0, " << mu2_ / 2.0 << ")";
        fail(ErrorKind::ContourViolation, os.str());
    }
    const double top = d2_.maxCoeff();
    level_of_.assign(size_t(dim_), -1);
    std::vector<std::pair<double, int>> order;
    for (Eigen::Index i = 0; i < dim_; ++i) order.push_back({d2_(i), int(i)});
    std::sort(order.begin(), order.end());
    for (const auto& [x, i] : order) {
        if (levels_.empty() || x - levels_.back() > 1e-9 * std::max(1.0, top)) levels_.push_back(x);
        level_of_[size_t(i)] = int(levels_.size()) - 1;
    }
}

ComplexMatrix ResolventContext::to_eigen(const ComplexMatrix& x) const {
    require_same_shape(x, t_.D, "ResolventContext");
    return v_.adjoint() * x * v_;
}

namespace {

// (1/2 pi i) int over the downward line Re(lambda) = a, by Gauss-Kronrod on
// [-V, V] with V doubled until the value settles.
template <class F>
cplx line_integral(F&& f, double a, double v0) {
    using boost::math::quadrature::gauss_kronrod;
    auto g = [&](double v) { return f(cplx(a, v)); };
    double err = 0.0;
    cplx total = gauss_kronrod<double, 31>::integrate(g, -v0, v0, 12, 1e-13, &err);
    double abs_acc = std::abs(total);
    double v = v0;
    for (int it = 0; it < 60; ++it) {
        const cplx shell = gauss_kronrod<double, 31>::integrate(g, v, 2.0 * v, 12, 1e-13, &err) +
                           gauss_kronrod<double, 31>::integrate(g, -2.0 * v, -v, 12, 1e-13, &err);
        total += shell;
        abs_acc += std::abs(shell);
        v *= 2.0;
        if (it >= 2 && std::abs(shell) <= 1e-8 * std::max(std::abs(total), 1e-6 * abs_acc)) return -total / (2.0 * kPi);
    }
    fail(ErrorKind::NonConvergence, "line_integral: truncation of the vertical line did not stabilise");
}

struct Segment {
    ComplexMatrix b;
    int power = 0;
};

}  // namespace

cplx ResolventContext::expectation(const std::vector<std::optional<ComplexMatrix>>& a, cplx r, double s,
                                   double t) const {
    if (a.empty()) fail(ErrorKind::DomainError, "expectation: empty tuple");
    std::vector<Segment> segs;
    segs.push_back({a[0] ? ComplexMatrix(gamma_ * to_eigen(*a[0])) : gamma_, 1});
    for (size_t i = 1; i < a.size(); ++i) {
        if (!a[i]) {
            ++segs.back().power;
        } else {
            segs.push_back({to_eigen(*a[i]), 1});
        }
    }
    const double shift = t + s * s;
    const cplx q = t_.p / 2.0 + r;
    const size_t nl = levels_.size();
    std::function<cplx(cplx)> trace;
    if (segs.size() == 1) {
        std::vector<cplx> c(nl, 0.0);
        for (Eigen::Index i = 0; i < dim_; ++i) c[size_t(level_of_[size_t(i)])] += segs[0].b(i, i);
        const int e0 = segs[0].power;
        trace = [this, c, e0, shift, nl](cplx lam) {
            cplx acc = 0.0;
            for (size_t k = 0; k < nl; ++k)
                if (c[k] != cplx(0.0)) acc += c[k] * std::pow(lam - (shift + levels_[k]), -e0);
            return acc;
        };
    } else if (segs.size() == 2) {
        std::map<std::pair<int, int>, cplx> g;
        for (Eigen::Index i = 0; i < dim_; ++i)
            for (Eigen::Index j = 0; j < dim_; ++j) {
                const cplx c = segs[0].b(i, j) * segs[1].b(j, i);
                if (c != cplx(0.0)) g[{level_of_[size_t(i)], level_of_[size_t(j)]}] += c;
            }
        std::vector<std::tuple<int, int, cplx>> terms;
        for (const auto& [k, v] : g) terms.emplace_back(k.first, k.second, v);
        const int e0 = segs[0].power, e1 = segs[1].power;
        trace = [this, terms, e0, e1, shift, nl](cplx lam) {
            std::vector<cplx> rp(nl);
            for (size_t k = 0; k < nl; ++k) rp[k] = 1.0 / (lam - (shift + levels_[k]));
            cplx acc = 0.0;
            for (const auto& [ia, jb, c] : terms)
                acc += c * std::pow(rp[size_t(jb)], e0) * std::pow(rp[size_t(ia)], e1);
            return acc;
        };
    } else {
        trace = [this, segs, shift](cplx lam) {
            ComplexVector rv(dim_);
            for (Eigen::Index i = 0; i < dim_; ++i) rv(i) = 1.0 / (lam - (shift + d2_(i)));
            ComplexMatrix prod = identity(dim_);
            for (const auto& sg : segs) {
                ComplexVector scale = rv.array().pow(double(sg.power));
                prod = (prod * sg.b) * scale.asDiagonal();
            }
            return prod.trace();
        };
    }
    auto f = [&](cplx lam) { return std::exp(-q * std::log(lam)) * trace(lam); };
    return line_integral(f, a_, 2.0 * (shift + mu2_) + 4.0);
}

cplx ResolventContext::s_integral(const std::vector<std::optional<ComplexMatrix>>& a, cplx r, double power) const {
    using boost::math::quadrature::gauss_kronrod;
    auto g = [&](double s) { return s == 0.0 && power > 0.0 ? cplx(0.0) : std::pow(s, power) * expectation(a, r, s); };
    double err = 0.0;
    return gauss_kronrod<double, 15>::integrate(g, 0.0, std::numeric_limits<double>::infinity(), 10, 1e-10, &err);
}

cplx ResolventContext::resolvent_cocycle(const Tuple& a, cplx r) const {
    const int m = int(a.size()) - 1;
    const int bullet = t_.parity == Parity::Odd ? 1 : 0;
    if (m < 0 || m % 2 != bullet) fail(ErrorKind::ParityMismatch, "resolvent_cocycle: degree parity");
    if (!(r.real() > (1.0 - m) / 2.0)) fail(ErrorKind::DomainError, "resolvent_cocycle: need Re(r) > (1-m)/2");
    std::vector<std::optional<ComplexMatrix>> ops;
    ops.push_back(a[0].full());
    for (int i = 1; i <= m; ++i) ops.push_back(commutator(t_.D, a[size_t(i)].a));
    for (int i = 1; i <= m; ++i)
        if (max_abs(*ops[size_t(i)]) == 0.0) return 0.0;
    return eta_m(m, t_.parity) * s_integral(ops, r, double(m));
}

cplx ResolventContext::zeta_representation(const Tuple& a, cplx r, int order, int* used_order) const {
    const int m = int(a.size()) - 1;
    const int bullet = t_.parity == Parity::Odd ? 1 : 0;
    if (m < 1 || m % 2 != bullet) fail(ErrorKind::ParityMismatch, "zeta_representation: degree parity");
    const double p = t_.p;
    const cplx rho = r - (1.0 - p) / 2.0;
    const ComplexMatrix head = gamma_ * to_eigen(a[0].full());
    std::vector<ComplexMatrix> da;
    for (int i = 1; i <= m; ++i) da.push_back(to_eigen(commutator(t_.D, a[size_t(i)].a)));
    // in the eigenbasis x_i = 1 + d_i^2 and [D^2, X]_{ij} = (x_i - x_j) X_ij
    const RealVector x = d2_.array() + 1.0;
    const int max_order = order >= 0 ? order : 400;
    cplx total = 0.0;
    int quiet = 0, n_used = 0;
    for (int n = 0; n <= max_order; ++n) {
        const int h = n + (m - bullet) / 2;
        cplx poly = 0.0;
        for (int l = 1 - bullet; l <= h; ++l) poly += sigma_nl(h, l, t_.parity) * std::pow(rho, l - 1 + bullet);
        const cplx w = double(n) + m / 2.0 + r - 0.5 + p / 2.0;
        cplx order_sum = 0.0;
        if (m == 1) {
            // diag_i = sum_j head_ij ((x_j - x_i)/x_i)^n da_ji, times x_i^{-w+n}
            for (Eigen::Index i = 0; i < dim_; ++i) {
                cplx acc = 0.0;
                for (Eigen::Index j = 0; j < dim_; ++j) {
                    const cplx c = head(i, j) * da[0](j, i);
                    if (c == cplx(0.0)) continue;
                    acc += c * std::pow((x(j) - x(i)) / x(i), n);
                }
                order_sum += acc * std::exp(-(w - double(n)) * std::log(x(i)));
            }
            order_sum *= alpha_k({n});
        } else {
            for (const auto& k : multi_indices(m, n)) {
                int tot = 0;
                for (int v : k) tot += v;
                if (tot != n) continue;
                ComplexMatrix prod = head;
                for (int i = 0; i < m; ++i) {
                    ComplexMatrix y = da[size_t(i)];
                    for (Eigen::Index r0 = 0; r0 < dim_; ++r0)
                        for (Eigen::Index c0 = 0; c0 < dim_; ++c0) y(r0, c0) *= std::pow(x(r0) - x(c0), k[size_t(i)]);
                    prod = prod * y;
                }
                cplx tr = 0.0;
                for (Eigen::Index i = 0; i < dim_; ++i) tr += prod(i, i) * std::exp(-w * std::log(x(i)));
                order_sum += alpha_k(k) * tr;
            }
        }
        const cplx term = (n % 2 ? -1.0 : 1.0) * order_sum * poly;
        total += term;
        n_used = n;
        if (order < 0) {
            quiet = std::abs(term) <= 1e-12 * std::max(std::abs(total), 1e-300) ? quiet + 1 : 0;
            if (quiet >= 3) break;
            if (n == max_order) fail(ErrorKind::NonConvergence, "zeta_representation: expansion did not settle");
        }
    }
    if (used_order) *used_order = n_used;
    if (bullet) total *= std::sqrt(cplx(0.0, 2.0 * kPi));
    return total;
}

cplx resolvent_expectation(const SpectralTriple& t, int m, cplx r, double s, double tt,
                           const std::vector<std::optional<ComplexMatrix>>& a) {
    if (int(a.size()) != m + 1) fail(ErrorKind::ShapeMismatch, "resolvent_expectation: tuple length must be m+1");
    return ResolventContext(t).expectation(a, r, s, tt);
}

MethodResult mckean_singer(const SpectralTriple& t, const IndexClass& x, const McKeanSingerOptions& opt) {
    if (t.parity != Parity::Even) fail(ErrorKind::ParityMismatch, "mckean_singer: needs an even triple");
    require_class_parity(t, x);
    MethodResult r;
    r.method = to_string(Method::McKeanSinger);
    r.gap_tolerance = 0.3;
    const ComplexMatrix e = x.x.full();
    const ComplexMatrix ce = identity(e.rows()) - e;
    const ComplexMatrix de = mul(e, mul(t.D, e)) + mul(ce, mul(t.D, ce));
    const double defect = max_abs(commutator(de, e));
    r.diagnostics["commutator_defect"] = defect;
    if (defect > 1e-10 * std::max(1.0, max_abs(t.D)))
        fail(ErrorKind::ValidationFailure, "mckean_singer: D_e does not commute with e");
    const ComplexMatrix b = mul(*t.grading, x.x.a);
    if (max_abs(b) == 0.0) {
        set_value(r, 0.0);
        return r;
    }
    // On the Moyal truncation the masked supertrace carries a boundary transient
    // exp(-2 t n_b / theta), n_b the first boundary level; start where it is ~1e-7.
    std::pair<double, double> win{1e-3, 1e-1};
    if (t.moyal) {
        const double nb = t.N - boundary_width(t.N) + 1;
        const double lo = 8.0 * t.moyal->theta / nb;
        win = {lo, 10.0 * lo};
    }
    if (opt.window) win = *opt.window;
    const HeatTrace ht(b, eig_hermitian(de), t.trace_weight);
    ZetaModel model = heat_trace_fit(ht.sample(log_grid(win.first, win.second, opt.samples)), t.p, opt.terms);
    model.heat = [ht](double s) { return ht(s); };
    r.diagnostics["fit_residual"] = model.fit_residual;
    r.diagnostics["fit_condition"] = model.condition;
    r.diagnostics["window_lo"] = win.first;
    r.diagnostics["window_hi"] = win.second;
    set_value(r, tau_l(model, -1));
    return r;
}

MethodResult run_method(const SpectralTriple& t, const IndexClass& x, Method m, const PairingOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    MethodResult r;
    try {
        if (m == Method::Residue) {
            r = residue_index(scaled_triple(t, opt.scale), x);
        } else if (m == Method::McKeanSinger) {
            r = mckean_singer(scaled_triple(t, opt.scale), x);
        } else {
            r = pairing_index(t, x, m, opt);
        }
    } catch (const Error& err) {
        r = MethodResult{};
        r.method = to_string(m);
        r.ok = false;
        r.error = err.what();
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace ncindex
