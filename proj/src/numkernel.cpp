#include "ncindex/numkernel.hpp"

#include <Eigen/Sparse>
#include <boost/math/special_functions/bernoulli.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ncindex {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::NonHermitianInput: return "NonHermitianInput";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::InvalidExponent: return "InvalidExponent";
        case ErrorKind::PoleError: return "PoleError";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::DegenerateWindow: return "DegenerateWindow";
        case ErrorKind::SingularResolvent: return "SingularResolvent";
        case ErrorKind::DegreeOverflow: return "DegreeOverflow";
        case ErrorKind::InvalidDimension: return "InvalidDimension";
        case ErrorKind::InvalidTheta: return "InvalidTheta";
        case ErrorKind::InvalidMu: return "InvalidMu";
        case ErrorKind::SingularPhase: return "SingularPhase";
        case ErrorKind::ArityUnderflow: return "ArityUnderflow";
        case ErrorKind::NotAnInvolution: return "NotAnInvolution";
        case ErrorKind::ParityMismatch: return "ParityMismatch";
        case ErrorKind::NotIdempotent: return "NotIdempotent";
        case ErrorKind::NotUnitary: return "NotUnitary";
        case ErrorKind::UnfitModel: return "UnfitModel";
        case ErrorKind::IllConditionedFit: return "IllConditionedFit";
        case ErrorKind::AmbiguousGap: return "AmbiguousGap";
        case ErrorKind::MissingZetaModel: return "MissingZetaModel";
        case ErrorKind::ContourViolation: return "ContourViolation";
        case ErrorKind::ConfigParseError: return "ConfigParseError";
        case ErrorKind::UnknownModel: return "UnknownModel";
        case ErrorKind::UnknownClass: return "UnknownClass";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ValidationFailure: return "ValidationFailure";
    }
    return "Unknown";
}

void require_finite(const ComplexMatrix& m, const char* where) {
    if (!m.allFinite()) fail(ErrorKind::DomainError, std::string(where) + ": non-finite entry");
}

void require_square(const ComplexMatrix& m, const char* where) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << where << ": expected square matrix, got " << m.rows() << "x" << m.cols();
        fail(ErrorKind::ShapeMismatch, os.str());
    }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* where) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << where << ": shapes " << a.rows() << "x" << a.cols() << " and " << b.rows() << "x" << b.cols()
           << " differ";
        fail(ErrorKind::ShapeMismatch, os.str());
    }
}

double max_abs(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const ComplexMatrix& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, max_abs(m));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > rel_tol * scale) return false;
    return true;
}

namespace {
double density(const ComplexMatrix& m);
double sparse_spectral_norm(const ComplexMatrix& m);
}  // namespace

double spectral_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    if (std::max(m.rows(), m.cols()) < 300) {
        Eigen::JacobiSVD<ComplexMatrix> s(m);
        return s.singularValues()(0);
    }
    // Large operators are block sparse in practice; go through m*m and the
    // component-split eigensolver instead of a dense SVD.
    if (density(m) < 0.08) return sparse_spectral_norm(m);
    const ComplexMatrix h = m.rows() <= m.cols() ? mul(m, ComplexMatrix(m.adjoint())) : mul(ComplexMatrix(m.adjoint()), m);
    const HermEig e = eig_hermitian((h + h.adjoint()) * 0.5);
    return std::sqrt(std::max(0.0, e.values(e.values.size() - 1)));
}

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square(a, "commutator");
    require_same_shape(a, b, "commutator");
    return mul(a, b) - mul(b, a);
}

namespace {

using SparseC = Eigen::SparseMatrix<cplx>;

double density(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::Index nz = 0;
    const cplx* p = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (p[i] != cplx(0.0, 0.0)) ++nz;
    return double(nz) / double(m.size());
}

SparseC to_sparse(const ComplexMatrix& m) { return m.sparseView(cplx(0.0), 0.0); }

double sparse_spectral_norm(const ComplexMatrix& m) {
    const SparseC s = to_sparse(m);
    const SparseC h = m.rows() <= m.cols() ? SparseC(s * s.adjoint()) : SparseC(s.adjoint() * s);
    const int n = int(h.rows());
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[size_t(x)] != x) x = parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
        return x;
    };
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseC::InnerIterator it(h, k); it; ++it) {
            const int a = find(int(it.row())), b = find(int(it.col()));
            if (a != b) parent[size_t(std::max(a, b))] = std::min(a, b);
        }
    std::vector<std::vector<int>> comps(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) comps[size_t(find(i))].push_back(i);
    double best = 0.0;
    std::vector<int> local(static_cast<size_t>(n), -1);
    for (const auto& idx : comps) {
        if (idx.empty()) continue;
        const Eigen::Index k = Eigen::Index(idx.size());
        ComplexMatrix sub = ComplexMatrix::Zero(k, k);
        for (Eigen::Index a = 0; a < k; ++a) local[size_t(idx[size_t(a)])] = int(a);
        for (int c : idx)
            for (SparseC::InnerIterator it(h, c); it; ++it) sub(local[size_t(it.row())], local[size_t(c)]) = it.value();
        sub = (sub + sub.adjoint().eval()) * 0.5;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sub, Eigen::EigenvaluesOnly);
        best = std::max(best, es.eigenvalues()(k - 1));
    }
    return std::sqrt(std::max(0.0, best));
}

}  // namespace

ComplexMatrix mul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) fail(ErrorKind::ShapeMismatch, "mul: inner dimensions differ");
    constexpr Eigen::Index kSmall = 160;
    if (a.rows() < kSmall && b.cols() < kSmall) return a * b;
    const double da = density(a), db = density(b);
    constexpr double kSparse = 0.08;
    if (da < kSparse && db < kSparse) {
        SparseC r = to_sparse(a) * to_sparse(b);
        return ComplexMatrix(r);
    }
    if (da < kSparse) return to_sparse(a) * b;
    if (db < kSparse) return a * to_sparse(b);
    return a * b;
}

std::vector<std::vector<int>> connected_components(const ComplexMatrix& m) {
    require_square(m, "connected_components");
    const int n = int(m.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (i != j && m(i, j) != cplx(0.0, 0.0)) {
                int ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
    std::vector<std::vector<int>> comps;
    std::vector<int> slot(n, -1);
    for (int i = 0; i < n; ++i) {
        int r = find(i);
        if (slot[r] < 0) {
            slot[r] = int(comps.size());
            comps.emplace_back();
        }
        comps[slot[r]].push_back(i);
    }
    return comps;
}

HermEig eig_hermitian(const ComplexMatrix& m) {
    require_square(m, "eig_hermitian");
    require_finite(m, "eig_hermitian");
    if (!is_hermitian(m)) fail(ErrorKind::NonHermitianInput, "eig_hermitian: matrix is not Hermitian within 1e-10");
    HermEig out;
    out.dim = m.rows();
    std::vector<double> all;
    all.reserve(size_t(m.rows()));
    for (auto& idx : connected_components(m)) {
        const Eigen::Index k = Eigen::Index(idx.size());
        ComplexMatrix sub(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(idx[a], idx[b]);
        sub = (sub + sub.adjoint().eval()) * 0.5;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sub);
        if (es.info() != Eigen::Success) {
            std::ostringstream os;
            os << "eig_hermitian: solver failed on block of size " << k;
            fail(ErrorKind::NonConvergence, os.str());
        }
        EigBlock blk{idx, es.eigenvalues(), es.eigenvectors()};
        for (Eigen::Index a = 0; a < k; ++a) all.push_back(blk.values(a));
        out.blocks.push_back(std::move(blk));
    }
    std::sort(all.begin(), all.end());
    out.values = Eigen::Map<RealVector>(all.data(), Eigen::Index(all.size()));
    return out;
}

ComplexMatrix HermEig::vectors() const {
    // Columns ordered by ascending eigenvalue, matching `values`.
    std::vector<std::pair<double, std::pair<int, int>>> order;
    for (int b = 0; b < int(blocks.size()); ++b)
        for (int j = 0; j < int(blocks[b].values.size()); ++j) order.push_back({blocks[b].values(j), {b, j}});
    std::stable_sort(order.begin(), order.end(), [](auto& x, auto& y) { return x.first < y.first; });
    ComplexMatrix v = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index c = 0; c < Eigen::Index(order.size()); ++c) {
        const auto& blk = blocks[order[c].second.first];
        const int j = order[c].second.second;
        for (Eigen::Index a = 0; a < Eigen::Index(blk.index.size()); ++a) v(blk.index[a], c) = blk.vectors(a, j);
    }
    return v;
}

ComplexMatrix HermEig::reconstruct(const std::function<cplx(double)>& f) const {
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (const auto& blk : blocks) {
        const Eigen::Index k = Eigen::Index(blk.index.size());
        ComplexVector fv(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            fv(j) = f(blk.values(j));
            if (!std::isfinite(fv(j).real()) || !std::isfinite(fv(j).imag())) {
                std::ostringstream os;
                os << "function undefined at eigenvalue " << blk.values(j);
                fail(ErrorKind::DomainError, os.str());
            }
        }
        ComplexMatrix local = blk.vectors * fv.asDiagonal() * blk.vectors.adjoint();
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) out(blk.index[a], blk.index[b]) = local(a, b);
    }
    return out;
}

ComplexMatrix apply_function(const RealFunction& f, const HermEig& eig) {
    ComplexMatrix r = eig.reconstruct([&](double x) { return cplx(f(x), 0.0); });
    return (r + r.adjoint().eval()) * 0.5;
}

ComplexMatrix apply_function(const RealFunction& f, const ComplexMatrix& m) {
    return apply_function(f, eig_hermitian(m));
}

ComplexMatrix apply_function_c(const ComplexFunction& f, const HermEig& eig) { return eig.reconstruct(f); }

namespace {

RealVector band_mass(const ComplexMatrix& vecs, const std::vector<int>& band) {
    RealVector mass = RealVector::Zero(vecs.cols());
    for (int i : band) {
        if (i < 0 || i >= vecs.rows()) continue;
        for (Eigen::Index c = 0; c < vecs.cols(); ++c) mass(c) += std::norm(vecs(i, c));
    }
    for (Eigen::Index c = 0; c < vecs.cols(); ++c) mass(c) = std::clamp(mass(c), 0.0, 1.0);
    return mass;
}

}  // namespace

SvdResult svd(const ComplexMatrix& a, const std::vector<int>& boundary_band) {
    return svd(a, boundary_band, boundary_band);
}

SvdResult svd(const ComplexMatrix& a, const std::vector<int>& row_band, const std::vector<int>& col_band) {
    require_finite(a, "svd");
    Eigen::BDCSVD<ComplexMatrix> s(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (s.info() != Eigen::Success) fail(ErrorKind::NonConvergence, "svd: decomposition failed");
    SvdResult r;
    r.values = s.singularValues();
    r.u = s.matrixU();
    r.v = s.matrixV();
    r.left_mass = band_mass(r.u, row_band);
    r.right_mass = band_mass(r.v, col_band);
    return r;
}

double schatten_norm(const ComplexMatrix& a, double p) {
    if (!(p >= 1.0)) fail(ErrorKind::InvalidExponent, "schatten_norm: exponent must be >= 1");
    if (a.size() == 0) return 0.0;
    RealVector sv = Eigen::BDCSVD<ComplexMatrix>(a).singularValues();
    if (std::isinf(p)) return sv(0);
    if (p == 1.0) return sv.sum();
    double acc = 0.0;
    const double top = sv(0);
    if (top == 0.0) return 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) acc += std::pow(sv(i) / top, p);
    return top * std::pow(acc, 1.0 / p);
}

// Lanczos approximation, g = 7 with nine coefficients, plus reflection.
cplx gamma_complex(cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
        fail(ErrorKind::PoleError, "gamma_complex: pole at nonpositive integer");
    if (z.real() < 0.5) {
        const cplx s = std::sin(kPi * z);
        if (std::abs(s) == 0.0) fail(ErrorKind::PoleError, "gamma_complex: pole");
        return kPi / (s * gamma_complex(1.0 - z));
    }
    static const double c[] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                               771.32342877765313,   -176.61502916214059,   12.507343278686905,
                               -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const cplx zz = z - 1.0;
    cplx x = c[0];
    for (int i = 1; i < 9; ++i) x += c[i] / (zz + double(i));
    const cplx t = zz + 7.5;
    const cplx lg = 0.5 * std::log(2.0 * kPi) + (zz + 0.5) * std::log(t) - t + std::log(x);
    return std::exp(lg);
}

cplx hurwitz_zeta(cplx s, double a) {
    if (!(a > 0.0)) fail(ErrorKind::DomainError, "hurwitz_zeta: a must be positive");
    if (std::abs(s - 1.0) < 1e-15) fail(ErrorKind::PoleError, "hurwitz_zeta: pole at s=1");
    // Shift until a+n is large compared with |s|, then Euler-Maclaurin with
    // twelve Bernoulli correction terms.
    const int kTerms = 12;
    const double target = std::max(25.0, 1.5 * std::abs(s) + 10.0);
    const int n = std::max(0, int(std::ceil(target - a)));
    cplx sum = 0.0;
    for (int k = 0; k < n; ++k) sum += std::exp(-s * std::log(a + k));
    const double x = a + n;
    const cplx xs = std::exp(-s * std::log(x));
    sum += x * xs / (s - 1.0) + 0.5 * xs;
    cplx rising = s;  // s(s+1)...(s+2j-2)
    cplx xpow = xs / x;
    double fact = 2.0;  // (2j)!
    for (int j = 1; j <= kTerms; ++j) {
        const double b2j = boost::math::bernoulli_b2n<double>(j);
        sum += b2j / fact * rising * xpow;
        rising *= (s + double(2 * j - 1)) * (s + double(2 * j));
        xpow /= x * x;
        fact *= double(2 * j + 1) * double(2 * j + 2);
    }
    return sum;
}

ResidueInfo laurent_residue_info(const std::function<cplx(cplx)>& f, cplx z0, double radius, int l) {
    if (!(radius > 0.0)) fail(ErrorKind::DomainError, "laurent_residue: radius must be positive");
    if (l < -1) fail(ErrorKind::DomainError, "laurent_residue: l must be >= -1");
    // (1/2πi)∮ (z-z0)^l f dz = mean over nodes of w^{l+1} f(z0+w), w = r e^{iφ}.
    auto term = [&](int j, int n) {
        const double phi = 2.0 * kPi * double(j) / double(n);
        const cplx w = std::polar(radius, phi);
        const cplx v = std::pow(w, double(l + 1)) * f(z0 + w);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            fail(ErrorKind::DomainError, "laurent_residue: integrand not finite on contour");
        return v;
    };
    int n = 16;
    cplx sum = 0.0;
    for (int j = 0; j < n; ++j) sum += term(j, n);
    cplx prev = sum / double(n);
    while (n < (1 << 14)) {
        // Doubling reuses the previous nodes; only odd indices are new.
        for (int j = 1; j < 2 * n; j += 2) sum += term(j, 2 * n);
        n *= 2;
        const cplx cur = sum / double(n);
        const double change = std::abs(cur - prev);
        if (change <= 1e-10 * std::max(1.0, std::abs(cur))) return {cur, n, change};
        prev = cur;
    }
    fail(ErrorKind::NonConvergence, "laurent_residue: no stabilisation with 2^14 nodes");
}

cplx laurent_residue(const std::function<cplx(cplx)>& f, cplx z0, double radius, int l) {
    return laurent_residue_info(f, z0, radius, l).value;
}

}  // namespace ncindex
