#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ncindex/ncintegration.hpp"
#include "ncindex/numkernel.hpp"
#include "ncindex/zeta.hpp"

namespace ncindex {

enum class Parity { Even = 0, Odd = 1 };
const char* to_string(Parity p);

struct NamedOperator {
    std::string name;
    ComplexMatrix op;
};

// Element a + c*1 of the unitization. Only `a` is a matrix; the scalar
// channel is carried separately so unit insertions and the a - 1_a
// correction stay exact.
struct Element {
    ComplexMatrix a;
    cplx c = 0.0;

    ComplexMatrix full() const;
    Element adjoint() const { return {a.adjoint(), std::conj(c)}; }
    Element scalar_part() const { return {ComplexMatrix::Zero(a.rows(), a.cols()), c}; }
    Element minus_scalar() const { return {a, 0.0}; }
};

Element operator*(const Element& x, const Element& y);
Element operator+(const Element& x, const Element& y);
Element operator*(cplx s, const Element& x);

// Lattice bookkeeping for the circle and the torus: index = point * spinor + s.
struct LatticeInfo {
    int p = 1;
    int spinor = 1;
    std::vector<std::array<int, 2>> points;
};

// Oscillator bookkeeping for the Moyal model: index = s*(N+1)^2 + m*(N+1) + n.
struct MoyalInfo {
    double theta = 2.0;
    int convention_sign = 1;  // global sign applied to the derived Dirac matrix
    int index(int spin, int m, int n, int N) const { return spin * (N + 1) * (N + 1) + m * (N + 1) + n; }
};

struct SpectralTriple {
    std::string kind;
    std::vector<NamedOperator> generators;
    ComplexMatrix D;
    std::optional<ComplexMatrix> grading;
    TraceWeight trace_weight;
    double p = 1.0;
    int N = 0;
    Parity parity = Parity::Odd;
    std::vector<int> boundary_band;
    std::optional<LatticeInfo> lattice;
    std::optional<MoyalInfo> moyal;
    bool doubled = false;
    double mu = 0.0;
    Eigen::Index base_dim = 0;

    Eigen::Index dim() const { return D.rows(); }
    ComplexMatrix gamma_or_identity() const;
};

struct TripleDiagnostics {
    double hermitian_defect = 0.0;
    double grading_defect = 0.0;  // max over the grading identities
    double max_commutator_norm = 0.0;
};

// Checks the SpectralTriple invariants; throws ValidationFailure on violation.
TripleDiagnostics validate_triple(const SpectralTriple& t, double tol = 1e-10);

int boundary_width(int N);

// Fourier polynomial: coefficient of e^{ij theta} keyed by j.
using FourierSymbol = std::map<int, cplx>;
ComplexMatrix circle_symbol_matrix(int N, const FourierSymbol& symbol);
SpectralTriple circle_triple(int N, const std::vector<FourierSymbol>& symbols);

SpectralTriple torus_triple(int p, int N, double theta);

SpectralTriple moyal_triple(int N, double theta);
// L(sum c f_{m,n}) tensor Id_2 on the Moyal Hilbert space.
struct MoyalCoefficient {
    int m, n;
    cplx c;
};
ComplexMatrix moyal_left(const SpectralTriple& t, const std::vector<MoyalCoefficient>& f);
ComplexMatrix moyal_projection(const SpectralTriple& t, const std::vector<int>& modes);

// Analytic profile of the flat Moyal plane: traces of
// L(f) (x) S times functions of 1+D^2 by radial integrals.
class PlaneProfile {
public:
    explicit PlaneProfile(double theta);
    double theta() const { return theta_; }
    // int f dx for f = sum G_{mn} f_{m,n}
    cplx integral(const ComplexMatrix& g) const;
    // int_{R^2} g(1+|xi|^2) dxi
    static double radial_integral(const std::function<double(double)>& g);
    // Tr(L(f) (x) S (1+D^2)^{-w}) with int f and tr S given
    cplx power_trace(cplx integral_f, cplx trace_s, cplx w) const;
    // Tr(L(f) (x) Id_2 (1+D^2)^{-s/2})
    cplx value(const ComplexMatrix& g, double s) const;
    // zeta(z) = Tr(L(f) (x) S (1+D^2)^{-w0-z}) as a meromorphic model
    ZetaModel zeta_model(cplx integral_f_trace_s, double w0) const;

private:
    double theta_;
};

PlaneProfile plane_radial_profile(double theta);

// Read the oscillator coefficient matrix G of an operator of the form
// sum L(g_ab) (x) E_ab at a fixed second index n0 (one block per spinor pair).
std::array<ComplexMatrix, 4> moyal_left_blocks(const SpectralTriple& t, const ComplexMatrix& op, int n0);
// Largest deviation between the blocks read at n0 and at n1: zero for a
// genuine left multiplication away from the truncation edge.
double moyal_left_defect(const SpectralTriple& t, const ComplexMatrix& op, int n0, int n1);

SpectralTriple double_triple(const SpectralTriple& t, double mu);
Element double_element(const Element& x, Eigen::Index base_dim);

struct PhaseProjection {
    ComplexMatrix F;
    ComplexMatrix P;
};
PhaseProjection phase_and_projection(const ComplexMatrix& d, double eps);
PhaseProjection phase_and_projection(const HermEig& eig, double eps);
// F = 2 chi_{[0,inf)}(D) - 1 with sign(0) = 1; defined for every D.
ComplexMatrix sign_phase(const HermEig& eig);

// Classes used by the index engines.
enum class ClassKind { Projection, Unitary };
struct IndexClass {
    std::string name;
    ClassKind kind = ClassKind::Unitary;
    Element x;
};

IndexClass circle_winding_class(const SpectralTriple& t, int w);
IndexClass moyal_mode_class(const SpectralTriple& t, const std::vector<int>& modes);
IndexClass scalar_projection_class(const SpectralTriple& t);
IndexClass identity_unitary_class(const SpectralTriple& t);

// Bott projector on R^2 and its degree-2 local index density.
namespace bott {
Eigen::Matrix2cd projector(cplx z);
// (p - 1/2)[D (x) Id_2, p]^2 at z; spinor-major 4x4 ordering
Eigen::Matrix4cd density(cplx z);
// the closed form shown alongside the computation
Eigen::Matrix4cd density_closed_form(cplx z);

// Degree-2 residue term of the local index formula for the Bott class on the
// flat plane, assembled from quadratures of the density above.
struct Assembly {
    double radial = 0.0;          // int_0^inf r/(1+r^2)^2 dr
    double fibre_integral = 0.0;  // int_{R^2} tr(gamma density) d^2x
    cplx residue = 0.0;           // res_{z=0} (1/2) Tr(gamma density (1+D^2)^{-1-z})
    cplx index = 0.0;             // residue times the Chern coefficient -2
};
Assembly assemble();
}  // namespace bott

}  // namespace ncindex
