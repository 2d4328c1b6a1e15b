#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncindex/ncintegration.hpp"
#include "ncindex/numkernel.hpp"

namespace ncindex {

struct PoleData {
    cplx location;
    int order = 1;
};

enum class ZetaBackend { Meromorphic, HeatFit };

// Either a closed-form meromorphic evaluator of zeta_b(z) = tau(b (1+D^2)^{-z}),
// or a Mellin model built from a fitted small-t heat-trace expansion.
struct ZetaModel {
    ZetaBackend backend = ZetaBackend::Meromorphic;
    std::string label;
    std::function<cplx(cplx)> evaluator;  // meromorphic backend
    std::vector<PoleData> poles;

    // heat-fit backend
    std::vector<HeatSample> samples;
    double p = 0.0;
    std::vector<double> exponents;     // (i - p)/2
    std::vector<double> coefficients;  // a_i
    double fit_residual = 0.0;         // relative, max over window
    double condition = 0.0;
    bool fit_ok = true;
    std::function<double(double)> heat;  // optional exact heat trace for the large-t tail
};

inline constexpr double kHeatFitTolerance = 1e-4;

cplx zeta_eval(const ZetaModel& model, cplx z);

ZetaModel meromorphic_model(std::function<cplx(cplx)> f, std::vector<PoleData> poles, std::string label = "");
ZetaModel constant_model(cplx c);

// sum_{k>=a0} k^j (1+k^2)^{-s} through a binomial series of Hurwitz zetas.
cplx lattice_power_tail(int j, cplx s, int k0);

// Polynomial symbol on the integer lattice: the diagonal of b is P_+(k) for
// k >= k0 and P_-(|k|) for k <= -k0, explicit values in between.
struct LatticeSymbol {
    int k0 = 2;
    std::vector<cplx> plus;   // coefficients of k^j
    std::vector<cplx> minus;  // coefficients of |k|^j
    std::map<int, cplx> core; // |k| < k0
    double w0 = 0.0;          // explicit (1+k^2)^{-w0} already inside b
    double fit_residual = 0.0;
};

// Fit a LatticeSymbol to diagonal data d(k) on the window k0 <= |k| <= k_max.
LatticeSymbol fit_lattice_symbol(const std::vector<int>& labels, const std::vector<cplx>& diag, int k_max,
                                 double w0, int max_degree = 6);
ZetaModel lattice_symbol_model(const LatticeSymbol& sym, std::string label = "lattice-symbol");

// sum_{n in Z^p} (1+|n|^2)^{-s} by Jacobi inversion of the theta function.
cplx epstein_zeta(int p, cplx s);
// c * (spinor trace) * sum_{n in Z^p} (1+|n|^2)^{-w0-z}; p = 1 routes through Hurwitz.
ZetaModel torus_lattice_model(int p, cplx c, double w0);

// Lower incomplete gamma for complex s and real x > 0, series form.
cplx lower_incomplete_gamma(cplx s, double x);

// Least-squares fit theta(t) ~ sum_{i<K} a_i t^{(i-p)/2}.
ZetaModel heat_trace_fit(const std::vector<HeatSample>& samples, double p, int k_terms = 4);

// theta_b(t) = tau_w(b e^{-t D^2}) evaluated through the block eigensystem.
class HeatTrace {
public:
    HeatTrace(const ComplexMatrix& b, const HermEig& eig, const TraceWeight& w = std::nullopt);
    double operator()(double t) const;
    cplx complex_value(double t) const;
    std::vector<HeatSample> sample(const std::vector<double>& ts) const;

private:
    std::vector<double> lam2_;
    std::vector<cplx> weight_;
};

struct ResidueOptions {
    double radius = 0.1;
    bool cross_check = true;
    double cross_tol = 1e-8;
};

// res_{z=center} (z-center)^l zeta(z); default center 0.
cplx tau_l(const ZetaModel& model, int l, cplx center = 0.0, const ResidueOptions& opt = {});

void write_heat_csv(std::ostream& os, const std::vector<HeatSample>& samples);
std::vector<HeatSample> read_heat_csv(std::istream& is);

}  // namespace ncindex
