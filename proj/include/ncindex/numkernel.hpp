#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "ncindex/errors.hpp"

namespace ncindex {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEigTol = 1e-10;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Throws DomainError when any entry is NaN or Inf; `where` names the caller.
void require_finite(const ComplexMatrix& m, const char* where);
void require_square(const ComplexMatrix& m, const char* where);
void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* where);

double max_abs(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double rel_tol = kEigTol);
double spectral_norm(const ComplexMatrix& m);
ComplexMatrix identity(Eigen::Index n);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

// Product that switches to a sparse kernel when both operands are large and
// mostly zero. Model operators (banded Dirac matrices, matrix units) are.
ComplexMatrix mul(const ComplexMatrix& a, const ComplexMatrix& b);

// Connected components of the graph whose edges are the nonzero entries.
// A Hermitian matrix is block diagonal over these index sets.
std::vector<std::vector<int>> connected_components(const ComplexMatrix& m);

struct EigBlock {
    std::vector<int> index;  // global row indices of this block
    RealVector values;       // local eigenvalues, ascending
    ComplexMatrix vectors;   // local eigenvectors as columns
};

// Eigensystem stored block by block; `values` holds all eigenvalues in
// ascending order and `vectors()` assembles the matching dense unitary.
struct HermEig {
    Eigen::Index dim = 0;
    RealVector values;
    std::vector<EigBlock> blocks;

    ComplexMatrix vectors() const;
    // Reconstruction V f(Λ) V* without forming V densely.
    ComplexMatrix reconstruct(const std::function<cplx(double)>& f) const;
};

HermEig eig_hermitian(const ComplexMatrix& m);

using RealFunction = std::function<double(double)>;
using ComplexFunction = std::function<cplx(double)>;

ComplexMatrix apply_function(const RealFunction& f, const ComplexMatrix& m);
ComplexMatrix apply_function(const RealFunction& f, const HermEig& eig);
// Complex-valued f, e.g. complex powers (1+x^2)^{z/2}.
ComplexMatrix apply_function_c(const ComplexFunction& f, const HermEig& eig);

struct SvdResult {
    RealVector values;       // descending
    ComplexMatrix u;         // left singular vectors (columns)
    ComplexMatrix v;         // right singular vectors (columns)
    RealVector left_mass;    // boundary mass of each column of u
    RealVector right_mass;   // boundary mass of each column of v
};

// Full SVD. boundary_band lists row indices (for u) / column indices (for v)
// flagged as truncation boundary; when the matrix is rectangular the same
// list is applied to both sides, filtered to each side's range.
SvdResult svd(const ComplexMatrix& a, const std::vector<int>& boundary_band);
SvdResult svd(const ComplexMatrix& a, const std::vector<int>& row_band,
              const std::vector<int>& col_band);

double schatten_norm(const ComplexMatrix& a, double p);

cplx gamma_complex(cplx z);
cplx hurwitz_zeta(cplx s, double a);

struct ResidueInfo {
    cplx value;
    int nodes = 0;
    double last_change = 0.0;
};

// res_{z=z0} (z-z0)^l f(z) by trapezoid quadrature on |z-z0|=radius.
ResidueInfo laurent_residue_info(const std::function<cplx(cplx)>& f, cplx z0, double radius, int l);
cplx laurent_residue(const std::function<cplx(cplx)>& f, cplx z0, double radius, int l);

}  // namespace ncindex
