#include "ncindex/cyclic.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace ncindex {

cplx Cochain::operator()(const Tuple& a) const {
    if (int(a.size()) != arity + 1) {
        std::ostringstream os;
        os << "cochain of arity " << arity << " evaluated on " << a.size() << " entries";
        fail(ErrorKind::ShapeMismatch, os.str());
    }
    return eval(a);
}

cplx pair(const Cochain& phi, const ChainTensor& chain) {
    cplx acc = 0.0;
    for (const auto& [c, t] : chain.terms) acc += c * phi(t);
    return acc;
}

Element unit_element(Eigen::Index n) { return {ComplexMatrix::Zero(n, n), 1.0}; }
Element as_element(const ComplexMatrix& a) { return {a, 0.0}; }

Cochain hochschild_b(const Cochain& phi) {
    const int m = phi.arity;
    Cochain out;
    out.arity = m + 1;
    out.parity = phi.parity == Parity::Even ? Parity::Odd : Parity::Even;
    out.eval = [phi, m](const Tuple& a) {
        cplx acc = 0.0;
        for (int k = 0; k <= m; ++k) {
            Tuple t;
            t.reserve(size_t(m + 1));
            for (int i = 0; i <= m + 1; ++i) {
                if (i == k) {
                    t.push_back(a[size_t(k)] * a[size_t(k + 1)]);
                    ++i;
                } else {
                    t.push_back(a[size_t(i)]);
                }
            }
            acc += (k % 2 ? -1.0 : 1.0) * phi(t);
        }
        Tuple t;
        t.push_back(a[size_t(m + 1)] * a[0]);
        for (int i = 1; i <= m; ++i) t.push_back(a[size_t(i)]);
        acc += ((m + 1) % 2 ? -1.0 : 1.0) * phi(t);
        return acc;
    };
    return out;
}

Cochain connes_B(const Cochain& phi) {
    const int m = phi.arity;
    if (m == 0) fail(ErrorKind::ArityUnderflow, "connes_B: cochain of arity 0");
    Cochain out;
    out.arity = m - 1;
    out.parity = phi.parity == Parity::Even ? Parity::Odd : Parity::Even;
    out.eval = [phi, m](const Tuple& a) {
        cplx acc = 0.0;
        const Eigen::Index n = a[0].a.rows();
        for (int k = 0; k < m; ++k) {
            Tuple t;
            t.push_back(unit_element(n));
            for (int i = k; i < m; ++i) t.push_back(a[size_t(i)]);
            for (int i = 0; i < k; ++i) t.push_back(a[size_t(i)]);
            // the sign exponent uses the summation index
            acc += (((m - 1) * k) % 2 ? -1.0 : 1.0) * phi(t);
        }
        return acc;
    };
    return out;
}

namespace {

void require_involution(const ComplexMatrix& f, const char* where) {
    require_square(f, where);
    const double scale = std::max(1.0, max_abs(f));
    if (max_abs(f - f.adjoint()) > kEigTol * scale || max_abs(mul(f, f) - identity(f.rows())) > kEigTol * scale)
        fail(ErrorKind::NotAnInvolution, std::string(where) + ": F is not a Hermitian involution");
}

}  // namespace

cplx conditional_trace(const ComplexMatrix& t, const ComplexMatrix& f, const TraceWeight& w) {
    require_same_shape(t, f, "conditional_trace");
    require_involution(f, "conditional_trace");
    const ComplexMatrix s = mul(f, t) + mul(t, f);
    return 0.5 * weighted_trace(mul(f, s), w);
}

cplx chern_cocycle_eval(const ComplexMatrix& f, const std::optional<ComplexMatrix>& gamma, int n, const Tuple& a,
                        const TraceWeight& w) {
    if (n < 0) fail(ErrorKind::DomainError, "chern_cocycle_eval: negative degree");
    const bool even = gamma.has_value();
    if ((n % 2 == 0) != even) {
        std::ostringstream os;
        os << "chern_cocycle_eval: degree " << n << " against an " << (even ? "even" : "odd") << " module";
        fail(ErrorKind::ParityMismatch, os.str());
    }
    if (int(a.size()) != n + 1) fail(ErrorKind::ShapeMismatch, "chern_cocycle_eval: tuple length must be n+1");
    require_involution(f, "chern_cocycle_eval");
    ComplexMatrix prod = a[0].full();
    if (even) prod = mul(*gamma, prod);
    for (int i = 1; i <= n; ++i) prod = mul(prod, commutator(f, a[size_t(i)].a));
    const double norm = std::tgamma(n / 2.0 + 1.0) / std::tgamma(n + 1.0);
    cplx c = norm;
    if (!even) c *= std::sqrt(cplx(0.0, 2.0));
    return c * conditional_trace(prod, f, w);
}

Cochain chern_cocycle(const ComplexMatrix& f, const std::optional<ComplexMatrix>& gamma, int n,
                      const TraceWeight& w) {
    Cochain out;
    out.arity = n;
    out.parity = n % 2 ? Parity::Odd : Parity::Even;
    out.eval = [f, gamma, n, w](const Tuple& a) { return chern_cocycle_eval(f, gamma, n, a, w); };
    return out;
}

namespace {

double defect_off(const ComplexMatrix& m, const std::vector<int>& ignore) {
    std::set<int> skip(ignore.begin(), ignore.end());
    double d = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (skip.count(int(i))) continue;
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (!skip.count(int(j))) d = std::max(d, std::abs(m(i, j)));
    }
    return d;
}

}  // namespace

ChainTensor chern_class_tensor(const IndexClass& x, int m, const std::vector<int>& ignore) {
    if (m < 0) fail(ErrorKind::DomainError, "chern_class_tensor: negative degree");
    const Element& e = x.x;
    const Eigen::Index n = e.a.rows();
    ChainTensor out;
    out.degree = m;
    if (x.kind == ClassKind::Projection) {
        if (m % 2) fail(ErrorKind::ParityMismatch, "chern_class_tensor: projections have even Chern classes");
        const Element sq = e * e;
        const double d = std::max(defect_off(sq.a - e.a, ignore), std::abs(sq.c - e.c));
        if (d > 1e-8) fail(ErrorKind::NotIdempotent, "chern_class_tensor: e^2 != e");
        if (m == 0) {
            out.terms.push_back({1.0, {e}});
            return out;
        }
        const int k = m / 2;
        const double c = (k % 2 ? -1.0 : 1.0) * std::tgamma(2.0 * k + 1.0) / std::tgamma(k + 1.0);
        Tuple t;
        t.push_back(e + Element{ComplexMatrix::Zero(n, n), -0.5});
        for (int i = 0; i < m; ++i) t.push_back(e);
        out.terms.push_back({c, t});
        return out;
    }
    if (m % 2 == 0) fail(ErrorKind::ParityMismatch, "chern_class_tensor: unitaries have odd Chern classes");
    const Element ud = e.adjoint();
    const Element p1 = ud * e, p2 = e * ud;
    const double d = std::max({defect_off(p1.a, ignore), defect_off(p2.a, ignore), std::abs(p1.c - 1.0),
                               std::abs(p2.c - 1.0)});
    if (d > 1e-8) fail(ErrorKind::NotUnitary, "chern_class_tensor: u is not unitary");
    const int k = (m - 1) / 2;
    const double c = (k % 2 ? -1.0 : 1.0) * std::tgamma(k + 1.0);
    Tuple t;
    for (int i = 0; i <= k; ++i) {
        t.push_back(ud);
        t.push_back(e);
    }
    out.terms.push_back({c, t});
    return out;
}

}  // namespace ncindex
