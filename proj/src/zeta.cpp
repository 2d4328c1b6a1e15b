#include "ncindex/zeta.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace ncindex {

namespace {

void check_off_poles(const ZetaModel& m, cplx z) {
    for (const auto& p : m.poles)
        if (std::abs(z - p.location) < 1e-12) fail(ErrorKind::PoleError, "zeta_eval: argument at a declared pole");
}

}  // namespace

cplx lower_incomplete_gamma(cplx s, double x) {
    if (!(x > 0.0)) fail(ErrorKind::DomainError, "lower_incomplete_gamma: x must be positive");
    // gamma(s,x) = x^s e^{-x} sum_k x^k / (s(s+1)...(s+k))
    cplx term = 1.0 / s;
    cplx sum = term;
    for (int k = 1; k < 2000; ++k) {
        term *= x / (s + double(k));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum) && double(k) > x) break;
    }
    return std::exp(s * std::log(x) - x) * sum;
}

cplx zeta_eval(const ZetaModel& model, cplx z) {
    check_off_poles(model, z);
    if (model.backend == ZetaBackend::Meromorphic) {
        if (!model.evaluator) fail(ErrorKind::MissingZetaModel, "zeta_eval: meromorphic model without evaluator");
        return model.evaluator(z);
    }
    if (!model.fit_ok) {
        std::ostringstream os;
        os << "zeta_eval: heat-trace fit residual " << model.fit_residual << " exceeds " << kHeatFitTolerance;
        fail(ErrorKind::UnfitModel, os.str());
    }
    // Gamma(z)^{-1} [ sum_i a_i gamma(z+beta_i, T) + int_T^inf t^{z-1} e^{-t} theta(t) dt ]
    double t_max = 0.0;
    for (const auto& s : model.samples) t_max = std::max(t_max, s.t);
    cplx acc = 0.0;
    for (size_t i = 0; i < model.coefficients.size(); ++i)
        acc += model.coefficients[i] * lower_incomplete_gamma(z + model.exponents[i], t_max);
    if (model.heat) {
        auto f = [&](double t) { return std::exp((z - 1.0) * std::log(t) - t) * model.heat(t); };
        boost::math::quadrature::exp_sinh<double> integrator;
        auto g = [&](double u) { return f(t_max + u); };
        const double re = integrator.integrate([&](double u) { return g(u).real(); });
        const double im = integrator.integrate([&](double u) { return g(u).imag(); });
        acc += cplx(re, im);
    }
    // 1/Gamma is entire; evaluate it through the reflection-safe gamma.
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real())) return 0.0;
    return acc / gamma_complex(z);
}

ZetaModel meromorphic_model(std::function<cplx(cplx)> f, std::vector<PoleData> poles, std::string label) {
    ZetaModel m;
    m.backend = ZetaBackend::Meromorphic;
    m.evaluator = std::move(f);
    m.poles = std::move(poles);
    m.label = std::move(label);
    return m;
}

ZetaModel constant_model(cplx c) {
    return meromorphic_model([c](cplx) { return c; }, {}, "constant");
}

cplx lattice_power_tail(int j, cplx s, int k0) {
    if (k0 < 2) fail(ErrorKind::DomainError, "lattice_power_tail: k0 must be at least 2");
    // (1+k^2)^{-s} = k^{-2s} sum_i binom(-s,i) k^{-2i}
    cplx binom = 1.0;
    cplx sum = 0.0;
    for (int i = 0; i < 400; ++i) {
        const cplx arg = 2.0 * s + double(2 * i - j);
        const cplx term = binom * hurwitz_zeta(arg, double(k0));
        sum += term;
        if (i > 2 && std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) return sum;
        binom *= (-s - double(i)) / double(i + 1);
    }
    fail(ErrorKind::NonConvergence, "lattice_power_tail: binomial series did not converge");
}

LatticeSymbol fit_lattice_symbol(const std::vector<int>& labels, const std::vector<cplx>& diag, int k_max,
                                 double w0, int max_degree) {
    if (labels.size() != diag.size()) fail(ErrorKind::ShapeMismatch, "fit_lattice_symbol: length mismatch");
    LatticeSymbol sym;
    sym.w0 = w0;
    sym.k0 = std::min(8, std::max(2, k_max / 2));
    std::map<int, cplx> data;
    for (size_t i = 0; i < labels.size(); ++i)
        if (std::abs(labels[i]) <= k_max) data[labels[i]] += diag[i];
    for (int k = -(sym.k0 - 1); k <= sym.k0 - 1; ++k) sym.core[k] = data.count(k) ? data[k] : cplx(0.0);

    double scale = 0.0;
    for (auto& kv : data) scale = std::max(scale, std::abs(kv.second));
    scale = std::max(scale, 1e-300);

    auto fit_side = [&](int sign, std::vector<cplx>& coeffs) {
        std::vector<int> ks;
        for (int k = 1; k <= k_max; ++k)
            if (data.count(sign * k)) ks.push_back(k);
        for (int deg = 0; deg <= max_degree; ++deg) {
            if (int(ks.size()) < deg + 2) break;
            Eigen::MatrixXcd a(Eigen::Index(ks.size()), deg + 1);
            Eigen::VectorXcd y(Eigen::Index(ks.size()));
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                const double k = ks[size_t(r)];
                // scale k to [0,1] for conditioning
                for (int c = 0; c <= deg; ++c) a(r, c) = std::pow(k / k_max, c);
                y(r) = data[sign * ks[size_t(r)]];
            }
            Eigen::VectorXcd sol = a.colPivHouseholderQr().solve(y);
            const double resid = (a * sol - y).cwiseAbs().maxCoeff() / scale;
            if (resid <= 1e-9) {
                coeffs.assign(size_t(deg + 1), 0.0);
                for (int c = 0; c <= deg; ++c) coeffs[size_t(c)] = sol(c) / std::pow(double(k_max), c);
                sym.fit_residual = std::max(sym.fit_residual, resid);
                return;
            }
        }
        fail(ErrorKind::UnfitModel, "fit_lattice_symbol: diagonal is not polynomial on the interior window");
    };
    fit_side(+1, sym.plus);
    fit_side(-1, sym.minus);
    return sym;
}

ZetaModel lattice_symbol_model(const LatticeSymbol& sym, std::string label) {
    auto f = [sym](cplx z) {
        const cplx s = sym.w0 + z;
        cplx acc = 0.0;
        for (const auto& kv : sym.core) acc += kv.second * std::exp(-s * std::log(1.0 + double(kv.first) * kv.first));
        for (size_t j = 0; j < sym.plus.size(); ++j)
            if (sym.plus[j] != cplx(0.0)) acc += sym.plus[j] * lattice_power_tail(int(j), s, sym.k0);
        for (size_t j = 0; j < sym.minus.size(); ++j)
            if (sym.minus[j] != cplx(0.0)) acc += sym.minus[j] * lattice_power_tail(int(j), s, sym.k0);
        return acc;
    };
    std::vector<PoleData> poles;
    const size_t deg = std::max(sym.plus.size(), sym.minus.size());
    for (size_t j = 0; j < deg; ++j) poles.push_back({cplx((1.0 + double(j)) / 2.0 - sym.w0, 0.0), 1});
    return meromorphic_model(f, poles, std::move(label));
}

namespace {

double theta3(double t) {
    double acc = 1.0;
    for (int k = 1; k < 64; ++k) {
        const double e = std::exp(-t * double(k) * k);
        acc += 2.0 * e;
        if (e < 1e-18) break;
    }
    return acc;
}

// (theta3(u))^p - 1 without cancellation for large u
double theta_power_minus_one(double u, int p) {
    double eps = 0.0;
    for (int k = 1; k < 64; ++k) {
        const double e = std::exp(-u * double(k) * k);
        eps += 2.0 * e;
        if (e < 1e-300) break;
    }
    double acc = 0.0, binom = 1.0, pw = 1.0;
    for (int j = 1; j <= p; ++j) {
        binom *= double(p - j + 1) / double(j);
        pw *= eps;
        acc += binom * pw;
    }
    return acc;
}

}  // namespace

cplx epstein_zeta(int p, cplx s) {
    if (p < 1 || p > 4) fail(ErrorKind::InvalidDimension, "epstein_zeta: p must be in 1..4");
    if (std::abs(s - 0.5 * p) < 1e-14) fail(ErrorKind::PoleError, "epstein_zeta: pole at s = p/2");
    using boost::math::quadrature::gauss_kronrod;
    const double half_p = 0.5 * p;
    // t >= 1 piece, entire in s
    auto f1 = [&](double t) { return std::exp((s - 1.0) * std::log(t) - t) * std::pow(theta3(t), p); };
    const cplx i1 = gauss_kronrod<double, 61>::integrate(f1, 1.0, 60.0, 12, 1e-14);
    // t <= 1 piece after Jacobi inversion, minus its singular part
    auto f2 = [&](double t) {
        if (t <= 0.0) return cplx(0.0);
        return std::exp((s - 1.0 - half_p) * std::log(t) - t) * theta_power_minus_one(kPi * kPi / t, p);
    };
    const cplx i2 = std::pow(kPi, half_p) * gauss_kronrod<double, 61>::integrate(f2, 0.0, 1.0, 12, 1e-14);
    const cplx sing = std::pow(kPi, half_p) * lower_incomplete_gamma(s - half_p, 1.0);
    return (sing + i1 + i2) / gamma_complex(s);
}

ZetaModel torus_lattice_model(int p, cplx c, double w0) {
    if (p != 1 && p != 2) fail(ErrorKind::InvalidDimension, "torus_lattice_model: p must be 1 or 2");
    const double spinor = p == 1 ? 1.0 : 2.0;
    if (p == 1) {
        LatticeSymbol sym;
        sym.k0 = 8;
        sym.w0 = w0;
        for (int k = -7; k <= 7; ++k) sym.core[k] = c;
        sym.plus = {c};
        sym.minus = {c};
        return lattice_symbol_model(sym, "torus-hurwitz");
    }
    auto f = [p, c, w0, spinor](cplx z) { return c * spinor * epstein_zeta(p, w0 + z); };
    return meromorphic_model(f, {{cplx(0.5 * p - w0, 0.0), 1}}, "torus-epstein");
}

ZetaModel heat_trace_fit(const std::vector<HeatSample>& samples, double p, int k_terms) {
    if (k_terms < 1) fail(ErrorKind::DomainError, "heat_trace_fit: need at least one term");
    if (int(samples.size()) < 3 * k_terms)
        fail(ErrorKind::IllConditionedFit, "heat_trace_fit: need at least 3K samples");
    ZetaModel m;
    m.backend = ZetaBackend::HeatFit;
    m.label = "heat-fit";
    m.samples = samples;
    m.p = p;
    const Eigen::Index rows = Eigen::Index(samples.size());
    Eigen::MatrixXd a(rows, k_terms);
    Eigen::VectorXd y(rows);
    double scale = 0.0;
    for (const auto& s : samples) scale = std::max(scale, std::abs(s.value));
    if (scale == 0.0) scale = 1.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& s = samples[size_t(r)];
        const double w = 1.0 / std::max(std::abs(s.value), 1e-3 * scale);
        for (int i = 0; i < k_terms; ++i) a(r, i) = std::pow(s.t, (i - p) / 2.0) * w;
        y(r) = s.value * w;
    }
    Eigen::VectorXd colscale = a.colwise().norm();
    for (int i = 0; i < k_terms; ++i)
        if (colscale(i) > 0.0) a.col(i) /= colscale(i);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    m.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : kInf;
    if (!(m.condition < 1e13)) {
        std::ostringstream os;
        os << "heat_trace_fit: condition number " << m.condition;
        fail(ErrorKind::IllConditionedFit, os.str());
    }
    Eigen::VectorXd sol = svd.solve(y);
    for (int i = 0; i < k_terms; ++i) {
        m.exponents.push_back((i - p) / 2.0);
        m.coefficients.push_back(colscale(i) > 0.0 ? sol(i) / colscale(i) : 0.0);
    }
    double worst = 0.0;
    for (const auto& s : samples) {
        double v = 0.0;
        for (int i = 0; i < k_terms; ++i) v += m.coefficients[size_t(i)] * std::pow(s.t, m.exponents[size_t(i)]);
        worst = std::max(worst, std::abs(v - s.value) / std::max(std::abs(s.value), 1e-3 * scale));
    }
    m.fit_residual = worst;
    m.fit_ok = worst <= kHeatFitTolerance;
    for (int i = 0; i < k_terms; ++i) {
        const double loc = (p - i) / 2.0;
        // 1/Gamma cancels the poles at nonpositive integers
        if (loc <= 0.0 && loc == std::floor(loc)) continue;
        m.poles.push_back({cplx(loc, 0.0), 1});
    }
    return m;
}

HeatTrace::HeatTrace(const ComplexMatrix& b, const HermEig& eig, const TraceWeight& w) {
    if (b.rows() != eig.dim || b.cols() != eig.dim) fail(ErrorKind::ShapeMismatch, "HeatTrace: shape mismatch");
    if (w && w->size() != eig.dim) fail(ErrorKind::ShapeMismatch, "HeatTrace: weight length differs");
    for (const auto& blk : eig.blocks) {
        const Eigen::Index k = Eigen::Index(blk.index.size());
        ComplexMatrix sub(k, k);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                sub(r, c) = (w ? (*w)(blk.index[r]) : 1.0) * b(blk.index[r], blk.index[c]);
        const ComplexMatrix t = blk.vectors.adjoint() * sub * blk.vectors;
        for (Eigen::Index j = 0; j < k; ++j) {
            lam2_.push_back(blk.values(j) * blk.values(j));
            weight_.push_back(t(j, j));
        }
    }
}

cplx HeatTrace::complex_value(double t) const {
    cplx acc = 0.0;
    for (size_t i = 0; i < lam2_.size(); ++i) acc += weight_[i] * std::exp(-t * lam2_[i]);
    return acc;
}

double HeatTrace::operator()(double t) const { return complex_value(t).real(); }

std::vector<HeatSample> HeatTrace::sample(const std::vector<double>& ts) const {
    std::vector<HeatSample> out;
    out.reserve(ts.size());
    for (double t : ts) out.push_back({t, (*this)(t)});
    return out;
}

cplx tau_l(const ZetaModel& model, int l, cplx center, const ResidueOptions& opt) {
    auto f = [&](cplx z) { return zeta_eval(model, z); };
    const cplx v = laurent_residue(f, center, opt.radius, l);
    if (opt.cross_check) {
        const cplx v2 = laurent_residue(f, center, 2.0 * opt.radius, l);
        if (std::abs(v - v2) > opt.cross_tol * std::max(1.0, std::abs(v))) {
            std::ostringstream os;
            os << "tau_l: residue depends on contour radius (" << v << " vs " << v2 << ")";
            fail(ErrorKind::NonConvergence, os.str());
        }
    }
    return v;
}

void write_heat_csv(std::ostream& os, const std::vector<HeatSample>& samples) {
    os << "t,value\n" << std::setprecision(17);
    for (const auto& s : samples) os << s.t << ',' << s.value << '\n';
    if (!os) fail(ErrorKind::IoError, "write_heat_csv: stream failure");
}

std::vector<HeatSample> read_heat_csv(std::istream& is) {
    std::vector<HeatSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) continue;
        std::istringstream ls(line);
        HeatSample s{};
        char comma = 0;
        if (!(ls >> s.t >> comma >> s.value) || comma != ',') {
            std::ostringstream os;
            os << "read_heat_csv: malformed row at line " << lineno;
            fail(ErrorKind::IoError, os.str());
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace ncindex
