#include "qkonc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qkonc/kernels.hpp"
#include "qkonc/simcore.hpp"

namespace qkonc {

namespace {

std::vector<double> offdiag_values(const Matrix& k) {
    if (!k.square()) throw std::invalid_argument("offdiag_percentiles: matrix not square");
    if (k.rows < 2) throw std::invalid_argument("offdiag_percentiles: need n >= 2");
    std::vector<double> vals;
    vals.reserve(k.rows * (k.rows - 1));
    for (std::size_t i = 0; i < k.rows; ++i)
        for (std::size_t j = 0; j < k.cols; ++j)
            if (i != j) vals.push_back(k(i, j));
    std::sort(vals.begin(), vals.end());
    return vals;
}

double interpolate(const std::vector<double>& sorted, double q) {
    const double h = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double offdiag_percentile(const Matrix& k, double q) {
    if (q < 0.0 || q > 100.0)
        throw std::invalid_argument("offdiag_percentile: q outside [0, 100]");
    return interpolate(offdiag_values(k), q);
}

std::pair<double, double> offdiag_percentiles(const Matrix& k) {
    const std::vector<double> vals = offdiag_values(k);
    return {interpolate(vals, 50.0), interpolate(vals, 95.0)};
}

double effective_rank(const Matrix& k) {
    if (!k.square() || k.rows < 1)
        throw std::invalid_argument("effective_rank: need a square matrix, n >= 1");
    const SymmetricEigenSystem es = symmetric_eig(symmetrize(k));
    double total = 0.0;
    std::vector<double> clipped(es.eigenvalues.size());
    for (std::size_t i = 0; i < clipped.size(); ++i) {
        clipped[i] = std::max(0.0, es.eigenvalues[i]);
        total += clipped[i];
    }
    if (total <= 0.0) throw std::invalid_argument("effective_rank: all-zero spectrum");
    double entropy = 0.0;
    for (double lam : clipped) {
        const double p = lam / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

double centered_alignment(const Matrix& k, const LabelVector& y) {
    if (!k.square()) throw std::invalid_argument("centered_alignment: matrix not square");
    const std::size_t n = k.rows;
    if (n < 2 || y.size() != n)
        throw std::invalid_argument("centered_alignment: label/kernel size mismatch or n < 2");

    int num_classes = 0;
    for (int c : y) {
        if (c < 0) throw std::invalid_argument("centered_alignment: negative class id");
        num_classes = std::max(num_classes, c + 1);
    }
    // L = Y Y^T of one-hot labels: L_ij = 1 iff same class.
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) l(i, j) = (y[i] == y[j]) ? 1.0 : 0.0;

    const Matrix kc = center(k);
    const Matrix lc = center(l);
    double dot = 0.0, knorm = 0.0, lnorm = 0.0;
    for (std::size_t idx = 0; idx < kc.data.size(); ++idx) {
        dot += kc.data[idx] * lc.data[idx];
        knorm += kc.data[idx] * kc.data[idx];
        lnorm += lc.data[idx] * lc.data[idx];
    }
    if (lnorm <= 0.0)
        throw std::invalid_argument("centered_alignment: single-class labels");
    if (knorm <= 0.0)
        throw std::invalid_argument("centered_alignment: zero centered kernel");
    return dot / (std::sqrt(knorm) * std::sqrt(lnorm));
}

std::vector<double> kernel_spectrum(const Matrix& k, bool trace_normalize) {
    const SymmetricEigenSystem es = symmetric_eig(symmetrize(k));
    std::vector<double> spectrum(es.eigenvalues.size());
    double total = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        spectrum[i] = std::max(0.0, es.eigenvalues[i]);
        total += spectrum[i];
    }
    if (trace_normalize) {
        if (total <= 0.0) throw std::invalid_argument("kernel_spectrum: all-zero spectrum");
        for (double& v : spectrum) v /= total;
    }
    return spectrum;
}

DiagnosticsReport compute_diagnostics(const Matrix& k,
                                      const std::optional<LabelVector>& labels) {
    DiagnosticsReport report;
    const auto [p50, p95] = offdiag_percentiles(k);
    report.p50 = p50;
    report.p95 = p95;
    report.spectrum = kernel_spectrum(k, true);
    double entropy = 0.0;
    for (double p : report.spectrum)
        if (p > 0.0) entropy -= p * std::log(p);
    report.effective_rank = std::exp(entropy);
    if (labels) report.alignment = centered_alignment(k, *labels);
    return report;
}

}  // namespace qkonc
