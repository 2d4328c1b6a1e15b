#pragma once

#include <optional>
#include <vector>

#include "ncindex/numkernel.hpp"
#include "ncindex/psido.hpp"

namespace ncindex {

using TraceWeight = std::optional<RealVector>;

// tau(T), optionally weighted by a nonnegative diagonal.
cplx weighted_trace(const ComplexMatrix& t, const TraceWeight& w = std::nullopt);

cplx weight_phi_s(const ComplexMatrix& t, const ComplexMatrix& d, double s, const TraceWeight& w = std::nullopt);
cplx weight_phi_s(const ComplexMatrix& t, const PsidoContext& ctx, double s, const TraceWeight& w = std::nullopt);

// |T| and positive square roots through the Hermitian eigensystem.
ComplexMatrix abs_operator(const ComplexMatrix& t);
ComplexMatrix sqrt_psd(const ComplexMatrix& a);

double q_norm(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n);
double p_norm_tracial(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n);
double p_nl_seminorm(const ComplexMatrix& t, const PsidoContext& ctx, double p, int n, int l);

struct HeatSample {
    double t;
    double value;
};

struct DimensionFit {
    double p_hat = 0.0;
    double coefficient = 0.0;
    double residual = 0.0;  // relative RMS over the window
};

// Log-spaced grid of `count` points on [t_min, t_max].
std::vector<double> log_grid(double t_min, double t_max, int count);

// Fits theta(t) ~ c t^{-p/2} + d over the samples (two-term fit); p is
// optimised by golden-section search, (c, d) by linear least squares.
DimensionFit spectral_dimension_fit(const std::vector<HeatSample>& samples);

struct SummabilityReport {
    std::vector<std::pair<double, cplx>> phi_values;
    std::vector<std::pair<int, double>> q_values;
    std::vector<std::pair<int, double>> p_values;
    std::optional<DimensionFit> dimension;
};

SummabilityReport summability_report(const ComplexMatrix& t, const PsidoContext& ctx, double p,
                                     const std::vector<double>& s_grid, const std::vector<int>& n_grid);

}  // namespace ncindex
