#include "ncindex/psido.hpp"

#include <cmath>
#include <functional>

namespace ncindex {

PsidoContext::PsidoContext(const ComplexMatrix& d) : d_(d), eig_(eig_hermitian(d)) {
    abs_d_ = apply_function([](double x) { return std::abs(x); }, eig_);
    d2_ = apply_function([](double x) { return x * x; }, eig_);
    sqrt1p_ = apply_function([](double x) { return std::sqrt(1.0 + x * x); }, eig_);
    inv_sqrt1p_ = apply_function([](double x) { return 1.0 / std::sqrt(1.0 + x * x); }, eig_);
}

ComplexMatrix PsidoContext::power_1p(cplx z) const {
    return apply_function_c([z](double x) { return std::exp(0.5 * z * std::log(1.0 + x * x)); }, eig_);
}

ComplexMatrix delta_comm(const ComplexMatrix& t, const PsidoContext& ctx, DeltaKind kind) {
    require_same_shape(t, ctx.d(), "delta_comm");
    const ComplexMatrix& f = kind == DeltaKind::Abs ? ctx.abs_d() : ctx.sqrt1p();
    return mul(f, t) - mul(t, f);
}

ComplexMatrix iterate_d2_comm(const ComplexMatrix& t, const PsidoContext& ctx, int n) {
    require_same_shape(t, ctx.d(), "iterate_d2_comm");
    if (n < 0) fail(ErrorKind::DomainError, "iterate_d2_comm: n must be nonnegative");
    ComplexMatrix cur = t;
    for (int i = 0; i < n; ++i) cur = mul(ctx.d_squared(), cur) - mul(cur, ctx.d_squared());
    return cur;
}

std::pair<ComplexMatrix, ComplexMatrix> lr_maps(const ComplexMatrix& t, const PsidoContext& ctx) {
    const ComplexMatrix c = iterate_d2_comm(t, ctx, 1);
    return {mul(ctx.inv_sqrt1p(), c), mul(c, ctx.inv_sqrt1p())};
}

ComplexMatrix sigma_z(const ComplexMatrix& t, const PsidoContext& ctx, cplx z) {
    require_same_shape(t, ctx.d(), "sigma_z");
    if (z == cplx(0.0)) return t;
    return mul(mul(ctx.power_1p(z), t), ctx.power_1p(-z));
}

ComplexMatrix log_derivation(const ComplexMatrix& t, const PsidoContext& ctx) {
    require_same_shape(t, ctx.d(), "log_derivation");
    const ComplexMatrix lg = apply_function([](double x) { return std::log1p(x * x); }, ctx.eig());
    return mul(lg, t) - mul(t, lg);
}

cplx taylor_Ck(cplx z, int k) {
    if (k < 0) fail(ErrorKind::DomainError, "taylor_Ck: k must be nonnegative");
    cplx v = 1.0;
    for (int j = 0; j < k; ++j) v *= (z - double(j)) / double(j + 1);
    return v;
}

double expansion_Ck(const std::vector<int>& k) {
    const int m = int(k.size());
    double denom = 1.0;
    int partial = 0, total = 0;
    for (int i = 0; i < m; ++i) {
        if (k[i] < 0) fail(ErrorKind::DomainError, "expansion_Ck: negative entry");
        denom *= std::tgamma(double(k[i]) + 1.0);
        partial += k[i];
        denom *= double(partial + i + 1);
        total += k[i];
    }
    return std::tgamma(double(total + m) + 1.0) / denom;
}

std::vector<std::vector<int>> multi_indices(int m, int order) {
    std::vector<std::vector<int>> out;
    if (m == 0) {
        out.push_back({});
        return out;
    }
    for (int total = 0; total <= order; ++total) {
        std::vector<int> k(size_t(m), 0);
        // enumerate compositions of `total` into m nonnegative parts
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == m - 1) {
                k[size_t(pos)] = left;
                out.push_back(k);
                return;
            }
            for (int v = left; v >= 0; --v) {
                k[size_t(pos)] = v;
                rec(pos + 1, left - v);
            }
        };
        rec(0, total);
    }
    return out;
}

double expansion_check(const PsidoContext& ctx, const std::vector<ComplexMatrix>& a, cplx lambda, int order,
                       double s) {
    const Eigen::Index n = ctx.dim();
    for (const auto& x : a) require_same_shape(x, ctx.d(), "expansion_check");
    const double shift = 1.0 + s * s;
    for (Eigen::Index i = 0; i < ctx.eig().values.size(); ++i) {
        const double x = shift + ctx.eig().values(i) * ctx.eig().values(i);
        if (std::abs(lambda - x) < 1e-12) fail(ErrorKind::SingularResolvent, "expansion_check: lambda on spectrum");
    }
    const ComplexMatrix r =
        apply_function_c([&](double x) { return 1.0 / (lambda - (shift + x * x)); }, ctx.eig());
    ComplexMatrix lhs = r;
    for (const auto& x : a) lhs = mul(mul(lhs, x), r);

    const int m = int(a.size());
    std::vector<std::vector<ComplexMatrix>> iter(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        iter[size_t(i)].push_back(a[size_t(i)]);
        for (int j = 1; j <= order; ++j)
            iter[size_t(i)].push_back(iterate_d2_comm(iter[size_t(i)].back(), ctx, 1));
    }
    ComplexMatrix rhs = ComplexMatrix::Zero(n, n);
    for (const auto& k : multi_indices(m, order)) {
        int tot = 0;
        ComplexMatrix prod = identity(n);
        for (int i = 0; i < m; ++i) {
            prod = mul(prod, iter[size_t(i)][size_t(k[size_t(i)])]);
            tot += k[size_t(i)];
        }
        const int power = m + tot + 1;
        const ComplexMatrix rp =
            apply_function_c([&](double x) { return std::pow(1.0 / (lambda - (shift + x * x)), power); }, ctx.eig());
        rhs += expansion_Ck(k) * mul(prod, rp);
    }
    return spectral_norm(lhs - rhs);
}

}  // namespace ncindex
