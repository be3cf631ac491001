#pragma once

// Gram-matrix construction for the three kernel families:
//
//   baseline    K_ij = |<psi(x_i)|psi(x_j)>|^2, symmetrized, unit diagonal.
//   local       per-patch similarities aggregated with convex weights, then
//               symmetrize -> unit-diagonal normalize -> PSD clip -> renormalize.
//               Patch similarity is either a subcircuit overlap or a metric
//               (fidelity / Hilbert-Schmidt) between patch reduced states.
//   multiscale  per-scale kernels (patch average; full-system patches use the
//               state overlap, smaller ones the HS inner product of reduced
//               states) mixed with convex weights, then unit-diagonal
//               normalize and symmetrize. No PSD projection.
//
// Plus the shared post-processing steps, cross-kernels against landmark sets
// and the Nystrom feature construction.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkonc/featuremaps.hpp"
#include "qkonc/matrix.hpp"
#include "qkonc/simcore.hpp"

namespace qkonc {

enum class KernelFamily { BASELINE, LOCAL_SUBCIRCUIT, LOCAL_RDM, MULTISCALE };
enum class RdmMetric { FIDELITY, HS };

std::string to_string(KernelFamily f);
std::string to_string(RdmMetric m);
KernelFamily kernel_family_from_string(const std::string& s);
RdmMetric rdm_metric_from_string(const std::string& s);

// Ordered qubit-index subsets with convex weights (renormalized to sum 1).
struct PatchSet {
    std::vector<std::vector<int>> patches;
    std::vector<double> weights;  // empty => uniform

    void normalize_weights();
    void validate(int d) const;
};

// A list of patch collections (one per scale) with convex mixing weights.
struct ScaleSpec {
    std::vector<std::vector<std::vector<int>>> scales;
    std::vector<double> alphas;  // empty => uniform

    void normalize_weights();
    void validate(int d) const;
};

struct KernelConfig {
    KernelFamily family = KernelFamily::BASELINE;
    FeatureMapSpec feature_map;
    std::optional<RdmMetric> rdm_metric;  // required iff family == LOCAL_RDM
    std::optional<PatchSet> patches;      // local families; default adjacent pairs
    std::optional<ScaleSpec> scales;      // multiscale; default pairs + full system
    int block_size = 64;                  // statevectors resident in the baseline path
    bool apply_psd_clip = true;           // local pipeline only; off = stop pre-clip

    void validate() const;
};

struct GramMeta {
    KernelFamily family = KernelFamily::BASELINE;
    FeatureMapSpec feature_map;
    std::optional<RdmMetric> rdm_metric;
    int qubits = 0;
    std::vector<std::string> flags;               // post-processing applied, in order
    std::map<std::string, std::string> extra;     // free-form provenance (hashes, ...)
};

struct GramMatrix {
    Matrix entries;
    GramMeta meta;

    std::size_t size() const { return entries.rows; }
};

// Default disjoint partition into adjacent pairs (2m, 2m+1); odd d gets a
// trailing singleton so the partition stays exhaustive. Uniform weights.
PatchSet default_patches(int d);

// Two scales: the default pair partition and the full system, alpha = (1/2, 1/2).
ScaleSpec default_scales(int d);

// --- Gram construction ------------------------------------------------------

GramMatrix baseline_kernel(const std::vector<Statevector>& states);

// Streaming variant: encodes states in blocks of at most `block_size` resident
// statevectors, so large-d sweeps never hold all n states at once.
GramMatrix baseline_kernel(const std::vector<FeatureVector>& X, const FeatureMapSpec& spec,
                           int block_size = 64);

GramMatrix local_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config);
GramMatrix multiscale_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config);

// Dispatch on config.family.
GramMatrix compute_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config);

// --- Post-processing --------------------------------------------------------

Matrix symmetrize(const Matrix& k);
Matrix unit_diag_normalize(const Matrix& k);  // K_ij / sqrt(K_ii K_jj)
Matrix psd_clip(const Matrix& k);             // clamp negative eigenvalues to 0
Matrix center(const Matrix& k);               // H K H, H = I - (1/n) ones

GramMatrix symmetrize(const GramMatrix& k);
GramMatrix unit_diag_normalize(const GramMatrix& k);
GramMatrix psd_clip(const GramMatrix& k);
GramMatrix center(const GramMatrix& k);

// --- Cross-kernels and Nystrom ----------------------------------------------

// C(i, j) = k(x_i, z_j) using the same per-pair similarity as the family's
// Gram path, without Gram-level post-processing. Rows are processed in chunks
// of `chunk_rows` samples.
Matrix cross_kernel(const std::vector<FeatureVector>& X, const std::vector<FeatureVector>& Z,
                    const KernelConfig& config, int chunk_rows = 64);

// Phi = C W^{-1/2}; W eigenvalues below 1e-10 * lambda_max are treated as zero
// (pseudo-inverse square root), so Phi Phi^T = C W^+ C^T.
Matrix nystrom_features(const Matrix& c, const Matrix& w);

// --- Persistence -------------------------------------------------------------

// Writes <stem>.json (header: n, family, feature map, flags, optional labels)
// and <stem>.bin (n*n little-endian float64, row-major).
void save_gram(const std::string& stem, const GramMatrix& gram,
               const std::optional<LabelVector>& labels = std::nullopt);

struct LoadedGram {
    GramMatrix gram;
    std::optional<LabelVector> labels;
};

// Accepts the stem or the .json path.
LoadedGram load_gram(const std::string& stem_or_json);

}  // namespace qkonc
