#pragma once

#include <memory>
#include <vector>

#include "ncindex/numkernel.hpp"

namespace ncindex {

// Immutable cache of D's eigensystem and the functions of D every
// pseudodifferential map needs.
class PsidoContext {
public:
    explicit PsidoContext(const ComplexMatrix& d);

    const ComplexMatrix& d() const { return d_; }
    const HermEig& eig() const { return eig_; }
    const ComplexMatrix& abs_d() const { return abs_d_; }
    const ComplexMatrix& d_squared() const { return d2_; }
    const ComplexMatrix& sqrt1p() const { return sqrt1p_; }          // (1+D^2)^{1/2}
    const ComplexMatrix& inv_sqrt1p() const { return inv_sqrt1p_; }  // (1+D^2)^{-1/2}
    Eigen::Index dim() const { return d_.rows(); }

    // (1+D^2)^{z/2}
    ComplexMatrix power_1p(cplx z) const;

private:
    ComplexMatrix d_;
    HermEig eig_;
    ComplexMatrix abs_d_, d2_, sqrt1p_, inv_sqrt1p_;
};

enum class DeltaKind { Abs, Sqrt1p };

ComplexMatrix delta_comm(const ComplexMatrix& t, const PsidoContext& ctx, DeltaKind kind = DeltaKind::Abs);
// n-fold commutator with D^2; n = 0 returns t.
ComplexMatrix iterate_d2_comm(const ComplexMatrix& t, const PsidoContext& ctx, int n);
// (L(T), R(T)) with L(T) = (1+D^2)^{-1/2}[D^2,T] and R(T) = [D^2,T](1+D^2)^{-1/2}.
std::pair<ComplexMatrix, ComplexMatrix> lr_maps(const ComplexMatrix& t, const PsidoContext& ctx);
ComplexMatrix sigma_z(const ComplexMatrix& t, const PsidoContext& ctx, cplx z);
ComplexMatrix log_derivation(const ComplexMatrix& t, const PsidoContext& ctx);

// z(z-1)...(z-k+1)/k!
cplx taylor_Ck(cplx z, int k);
// (|k|+m)! / (k_1!...k_m! (k_1+1)(k_1+k_2+2)...(|k|+m))
double expansion_Ck(const std::vector<int>& k);

// All multi-indices of length m with entries summing to at most `order`,
// ordered by total degree then lexicographically.
std::vector<std::vector<int>> multi_indices(int m, int order);

// Spectral norm of R A_1 R ... A_m R - sum_{|k|<=M} C(k) A_1^{(k_1)}...A_m^{(k_m)} R^{m+|k|+1}
// with R = (lambda - (1 + s^2 + D^2))^{-1}.
double expansion_check(const PsidoContext& ctx, const std::vector<ComplexMatrix>& a, cplx lambda, int order,
                       double s = 0.0);

}  // namespace ncindex
