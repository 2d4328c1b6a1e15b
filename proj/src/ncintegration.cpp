#include "ncindex/ncintegration.hpp"

#include <algorithm>
#include <cmath>

namespace ncindex {

cplx weighted_trace(const ComplexMatrix& t, const TraceWeight& w) {
    require_square(t, "weighted_trace");
    if (!w) return t.trace();
    if (w->size() != t.rows()) fail(ErrorKind::ShapeMismatch, "weighted_trace: weight length differs");
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) acc += (*w)(i)*t(i, i);
    return acc;
}

cplx weight_phi_s(const ComplexMatrix& t, const PsidoContext& ctx, double s, const TraceWeight& w) {
    require_same_shape(t, ctx.d(), "weight_phi_s");
    if (!(s > 0.0)) fail(ErrorKind::DomainError, "weight_phi_s: s must be positive");
    const ComplexMatrix q = apply_function([s](double x) { return std::pow(1.0 + x * x, -s / 4.0); }, ctx.eig());
    return weighted_trace(mul(mul(q, t), q), w);
}

cplx weight_phi_s(const ComplexMatrix& t, const ComplexMatrix& d, double s, const TraceWeight& w) {
    require_same_shape(t, d, "weight_phi_s");
    return weight_phi_s(t, PsidoContext(d), s, w);
}

ComplexMatrix sqrt_psd(const ComplexMatrix& a) {
    const ComplexMatrix h = (a + a.adjoint()) * 0.5;
    return apply_function([](double x) { return std::sqrt(std::max(x, 0.0)); }, h);
}

ComplexMatrix abs_operator(const ComplexMatrix& t) { return sqrt_psd(mul(t.adjoint(), t)); }

double q_norm(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n) {
    if (n < 1) fail(ErrorKind::DomainError, "q_norm: n must be positive");
    const double s = p + 1.0 / n;
    const double op = spectral_norm(t);
    const double a = weight_phi_s(mul(t.adjoint(), t), ctx, s).real();
    const double b = weight_phi_s(mul(t, t.adjoint()), ctx, s).real();
    return std::sqrt(std::max(0.0, op * op + a + b));
}

double p_norm_tracial(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n) {
    if (n < 1) fail(ErrorKind::DomainError, "p_norm_tracial: n must be positive");
    const double s = p + 1.0 / n;
    return spectral_norm(t) + 2.0 * weight_phi_s(abs_operator(t), ctx, s).real();
}

double p_nl_seminorm(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n, int l) {
    if (l < 0) fail(ErrorKind::DomainError, "p_nl_seminorm: l must be nonnegative");
    double acc = 0.0;
    ComplexMatrix cur = t;
    for (int j = 0; j <= l; ++j) {
        acc += p_norm_tracial(cur, ctx, p, n);
        if (j < l) cur = delta_comm(cur, ctx, DeltaKind::Abs);
    }
    return acc;
}

std::vector<double> log_grid(double t_min, double t_max, int count) {
    if (count < 2 || !(t_min > 0.0) || !(t_max > t_min)) fail(ErrorKind::DomainError, "log_grid: bad window");
    std::vector<double> g(static_cast<size_t>(count));
    const double a = std::log(t_min), b = std::log(t_max);
    for (int i = 0; i < count; ++i) g[size_t(i)] = std::exp(a + (b - a) * i / double(count - 1));
    return g;
}

namespace {

struct LinFit {
    double c, d, rel_rms;
};

LinFit fit_at(const std::vector<HeatSample>& xs, double p) {
    Eigen::MatrixXd a(Eigen::Index(xs.size()), 2);
    Eigen::VectorXd y(Eigen::Index(xs.size()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        // relative weighting so every sample counts equally
        const double w = 1.0 / std::max(std::abs(xs[size_t(i)].value), 1e-300);
        a(i, 0) = std::pow(xs[size_t(i)].t, -p / 2.0) * w;
        a(i, 1) = w;
        y(i) = xs[size_t(i)].value * w;
    }
    Eigen::Vector2d sol = a.colPivHouseholderQr().solve(y);
    const double rms = std::sqrt((a * sol - y).squaredNorm() / double(y.size()));
    return {sol(0), sol(1), rms};
}

}  // namespace

DimensionFit spectral_dimension_fit(const std::vector<HeatSample>& samples) {
    if (samples.size() < 4) fail(ErrorKind::DegenerateWindow, "spectral_dimension_fit: need at least 4 samples");
    // Effective log-log slope across the window; a bounded spectrum gives ~0.
    auto by_t = samples;
    std::sort(by_t.begin(), by_t.end(), [](auto& x, auto& y) { return x.t < y.t; });
    const double v0 = by_t.front().value, v1 = by_t.back().value;
    if (!(v0 > 0.0) || !(v1 > 0.0))
        fail(ErrorKind::DegenerateWindow, "spectral_dimension_fit: heat trace must be positive");
    const double p_eff = 2.0 * std::log(v0 / v1) / std::log(by_t.back().t / by_t.front().t);
    if (p_eff < 0.1) fail(ErrorKind::DegenerateWindow, "spectral_dimension_fit: heat trace is flat over the window");
    double a = 0.0, b = 8.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = fit_at(samples, x1).rel_rms, f2 = fit_at(samples, x2).rel_rms;
    for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fit_at(samples, x1).rel_rms;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fit_at(samples, x2).rel_rms;
        }
    }
    const double p = 0.5 * (a + b);
    const LinFit lf = fit_at(samples, p);
    if (p < 0.05) fail(ErrorKind::DegenerateWindow, "spectral_dimension_fit: no asymptotic growth in window");
    return {p, lf.c, lf.rel_rms};
}

SummabilityReport summability_report(const ComplexMatrix& t, const PsidoContext& ctx, double p,
                                     const std::vector<double>& s_grid, const std::vector<int>& n_grid) {
    SummabilityReport r;
    const ComplexMatrix tt = mul(t.adjoint(), t);
    for (double s : s_grid) r.phi_values.push_back({s, weight_phi_s(tt, ctx, s)});
    for (int n : n_grid) {
        r.q_values.push_back({n, q_norm(t, ctx, p, n)});
        r.p_values.push_back({n, p_norm_tracial(t, ctx, p, n)});
    }
    return r;
}

}  // namespace ncindex
