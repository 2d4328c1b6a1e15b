#pragma once

#include <random>

#include "ncindex/numkernel.hpp"

namespace testutil {

using ncindex::ComplexMatrix;
using ncindex::cplx;

inline ComplexMatrix random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cplx(n(rng), n(rng));
    return m;
}

inline ComplexMatrix random_hermitian(std::mt19937& rng, Eigen::Index n) {
    const ComplexMatrix a = random_matrix(rng, n, n);
    return (a + a.adjoint()) * 0.5;
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testutil
