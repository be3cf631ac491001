#pragma once

// Kernel-geometry statistics: off-diagonal percentiles (concentration),
// entropy-based effective rank (spectral richness), centered kernel-target
// alignment, and the trace-normalized spectrum.

#include <optional>
#include <utility>
#include <vector>

#include "qkonc/matrix.hpp"

namespace qkonc {

struct DiagnosticsReport {
    double p50 = 0.0;
    double p95 = 0.0;
    double effective_rank = 0.0;
    std::optional<double> alignment;   // absent without labels
    std::vector<double> spectrum;      // descending, trace-normalized
};

// Percentiles of the off-diagonal multiset {K_ij : i != j} (both triangles),
// with linear interpolation between sorted order statistics.
std::pair<double, double> offdiag_percentiles(const Matrix& k);

double offdiag_percentile(const Matrix& k, double q);  // q in [0, 100]

// exp(-sum p_i log p_i) of the clipped, trace-normalized spectrum of the
// symmetrized kernel. 0 log 0 reads as 0.
double effective_rank(const Matrix& k);

// <K_c, L_c>_F / (||K_c||_F ||L_c||_F) with L = Y Y^T from one-hot labels and
// K_c = H K H centering. Needs at least two classes.
double centered_alignment(const Matrix& k, const LabelVector& y);

// Descending eigenvalues of the symmetrized kernel; negative values clamped to
// zero and, when trace_normalize is set, scaled to sum to 1.
std::vector<double> kernel_spectrum(const Matrix& k, bool trace_normalize = true);

DiagnosticsReport compute_diagnostics(const Matrix& k,
                                      const std::optional<LabelVector>& labels = std::nullopt);

}  // namespace qkonc
