#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ncindex/models.hpp"
#include "ncindex/ncintegration.hpp"
#include "ncindex/numkernel.hpp"

namespace ncindex {

using Tuple = std::vector<Element>;

// Multilinear functional on (arity+1)-tuples of unitization elements.
struct Cochain {
    int arity = 0;
    Parity parity = Parity::Even;
    std::function<cplx(const Tuple&)> eval;

    cplx operator()(const Tuple& a) const;
};

// Formal sum of (arity+1)-tuples.
struct ChainTensor {
    int degree = 0;
    std::vector<std::pair<cplx, Tuple>> terms;
};

cplx pair(const Cochain& phi, const ChainTensor& chain);

// Unit of the unitization at the given matrix size.
Element unit_element(Eigen::Index n);
Element as_element(const ComplexMatrix& a);

Cochain hochschild_b(const Cochain& phi);
// Only valid on normalised cochains; the unit is inserted through the scalar channel.
Cochain connes_B(const Cochain& phi);

// 1/2 tau(F(FT + TF)); F must be a Hermitian involution.
cplx conditional_trace(const ComplexMatrix& t, const ComplexMatrix& f, const TraceWeight& w = std::nullopt);

// Normalised Chern cocycle of (F, gamma) in degree n evaluated on a tuple.
// gamma present means an even module; the odd case carries sqrt(2i) and no gamma.
cplx chern_cocycle_eval(const ComplexMatrix& f, const std::optional<ComplexMatrix>& gamma, int n, const Tuple& a,
                        const TraceWeight& w = std::nullopt);
Cochain chern_cocycle(const ComplexMatrix& f, const std::optional<ComplexMatrix>& gamma, int n,
                      const TraceWeight& w = std::nullopt);

// Ch_m of a projection (m even) or a unitary (m odd). Rows listed in
// `ignore` are excluded from the idempotent/unitary check; this is where a
// truncated shift fails to be unitary.
ChainTensor chern_class_tensor(const IndexClass& x, int m, const std::vector<int>& ignore = {});

}  // namespace ncindex
