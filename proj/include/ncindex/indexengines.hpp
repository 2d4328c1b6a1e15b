#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncindex/cyclic.hpp"
#include "ncindex/models.hpp"
#include "ncindex/numkernel.hpp"
#include "ncindex/zeta.hpp"

namespace ncindex {

struct ResidueConstants {
    double p = 1.0;
    Parity parity = Parity::Odd;
    int M = 1;
    // alpha(k) for every multi-index of length m (m of the right parity, m <= M) with |k| <= M - m
    std::map<std::vector<int>, double> alpha;
    // sigma[n][l], n <= M + 1
    std::vector<std::vector<double>> sigma;
    std::map<int, cplx> eta;
};

int residue_degree_bound(double p, Parity parity);
double alpha_k(const std::vector<int>& k);
// Coefficient of z^l in prod_{j<n}(z + j + 1/2) (odd) or prod_{j<n}(z + j) (even).
double sigma_nl(int n, int l, Parity parity);
// Same numbers as exact fractions "num/den", for table checks.
std::string sigma_nl_exact(int n, int l, Parity parity);
cplx eta_m(int m, Parity parity);
ResidueConstants residue_constants(double p, Parity parity);

struct FredholmOptions {
    double tol = 1e-8;  // relative to the largest singular value
    double mass_threshold = 0.5;
    std::vector<int> row_band, col_band;  // indices in embedded coordinates
    std::optional<ComplexMatrix> row_embed, col_embed;  // columns map local to embedded coordinates
};

struct FredholmResult {
    int raw = 0;
    int filtered = 0;
    int kernel_raw = 0, cokernel_raw = 0;
    int kernel_filtered = 0, cokernel_filtered = 0;
    double gap = 0.0;  // smallest singular value above the threshold
    double threshold = 0.0;
};

FredholmResult fredholm_index(const ComplexMatrix& a, const FredholmOptions& opt = {});

enum class Method { Compression, TracePower, NoDouble, Chern, Residue, McKeanSinger };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct MethodResult {
    std::string method;
    cplx value = 0.0;
    long rounded = 0;
    double gap = 0.0;
    double gap_tolerance = 0.1;
    double runtime_ms = 0.0;
    bool ok = false;
    std::string error;
    std::map<std::string, double> diagnostics;
};

struct IndexReport {
    std::string model;
    std::string cls;
    std::vector<MethodResult> methods;
    bool verdict = false;
    long agreed = 0;
    void finalize();
};

// The doubling term contributes a truncation error of order mu^2 / N to the
// trace formulas, so the default mass is small.
inline constexpr double kDefaultMu = 0.1;

struct PairingOptions {
    std::optional<double> mu;  // doubling mass, kDefaultMu when unset
    double eps = 1.0;          // F_eps for the undoubled even compression
    double scale = 1.0;        // D -> scale * D
    double tol = 1e-8;
    double mass_threshold = 0.5;
};

SpectralTriple scaled_triple(const SpectralTriple& t, double lambda);

MethodResult pairing_index(const SpectralTriple& t, const IndexClass& x, Method mode, const PairingOptions& opt = {});

// Zeta function of tau(b (1+D^2)^{-w0-z}) built from the model's analytic backend
// (lattice symbol or plane profile) or, failing that, from a heat-trace fit.
ZetaModel coefficient_zeta(const SpectralTriple& t, const ComplexMatrix& b, double w0);

// m-th residue cocycle component on a tuple of unitization elements.
cplx residue_cocycle_component(const SpectralTriple& t, int m, const Tuple& a);
MethodResult residue_index(const SpectralTriple& t, const IndexClass& x);

// Expectations over the vertical line Re(lambda) = a for an invertible D.
class ResolventContext {
public:
    // a <= 0 selects the default mu^2/4
    explicit ResolventContext(const SpectralTriple& t, double a = -1.0);
    double abscissa() const { return a_; }
    double mu_squared() const { return mu2_; }
    Eigen::Index dim() const { return dim_; }
    // Entries equal to std::nullopt stand for the identity.
    cplx expectation(const std::vector<std::optional<ComplexMatrix>>& a, cplx r, double s, double t = 1.0) const;
    // eta_m int_0^inf s^m <a_0, da_1, ..., da_m> ds at t = 1
    cplx resolvent_cocycle(const Tuple& a, cplx r) const;
    // int_0^inf s^power <A>_{m,r,s,1} ds
    cplx s_integral(const std::vector<std::optional<ComplexMatrix>>& a, cplx r, double power) const;
    // [D, x] on the context's Hilbert space
    ComplexMatrix d_comm(const ComplexMatrix& x) const { return commutator(t_.D, x); }
    // Term-by-term zeta form of the resolvent cocycle, expansion order `order`
    // (negative: add terms until they fall below 1e-12 relative).
    cplx zeta_representation(const Tuple& a, cplx r, int order = -1, int* used_order = nullptr) const;

private:
    ComplexMatrix to_eigen(const ComplexMatrix& x) const;

    SpectralTriple t_;
    double a_ = 0.0, mu2_ = 0.0;
    Eigen::Index dim_ = 0;
    ComplexMatrix v_, gamma_;
    RealVector d2_;
    std::vector<double> levels_;     // distinct eigenvalues of D^2
    std::vector<int> level_of_;      // eigenvector -> level
};

cplx resolvent_expectation(const SpectralTriple& t, int m, cplx r, double s, double tt,
                           const std::vector<std::optional<ComplexMatrix>>& a);

struct McKeanSingerOptions {
    std::optional<std::pair<double, double>> window;  // default depends on the model
    int samples = 40;
    int terms = 4;
};

MethodResult mckean_singer(const SpectralTriple& t, const IndexClass& x, const McKeanSingerOptions& opt = {});

// Runs a method and records errors instead of throwing.
MethodResult run_method(const SpectralTriple& t, const IndexClass& x, Method m, const PairingOptions& opt = {});

}  // namespace ncindex
