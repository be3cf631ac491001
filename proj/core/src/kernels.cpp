#include "qkonc/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qkonc/parallel.hpp"

namespace qkonc {

namespace {

constexpr double kWeightSumTol = 1e-12;

std::vector<Statevector> encode_all(const std::vector<FeatureVector>& X,
                                    const FeatureMapSpec& spec) {
    std::vector<Statevector> states(X.size());
    parallel_for(0, X.size(), [&](std::size_t i) { states[i] = encode(spec, X[i]); });
    return states;
}

int feature_dim(const std::vector<FeatureVector>& X, const char* who) {
    if (X.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
    const std::size_t d = X[0].size();
    for (const auto& x : X)
        if (x.size() != d)
            throw std::invalid_argument(std::string(who) + ": mixed feature dimensions");
    return static_cast<int>(d);
}

double overlap_sq(const Statevector& a, const Statevector& b) {
    return std::norm(inner_product(a, b));
}

void add_symmetric(Matrix& k, std::size_t i, std::size_t j, double v) {
    k(i, j) += v;
    if (i != j) k(j, i) += v;
}

double rdm_similarity(RdmMetric metric, const DensityMatrix& a, const DensityMatrix& b) {
    return metric == RdmMetric::HS ? hs_inner(a, b) : uhlmann_fidelity(a, b);
}

std::vector<DensityMatrix> patch_rdms(const std::vector<Statevector>& states,
                                      const std::vector<int>& patch) {
    std::vector<DensityMatrix> rdms(states.size());
    parallel_for(0, states.size(),
                 [&](std::size_t i) { rdms[i] = partial_trace(states[i], patch); });
    return rdms;
}

}  // namespace

std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::BASELINE: return "baseline";
        case KernelFamily::LOCAL_SUBCIRCUIT: return "local_subcircuit";
        case KernelFamily::LOCAL_RDM: return "local_rdm";
        case KernelFamily::MULTISCALE: return "multiscale";
    }
    return "?";
}

std::string to_string(RdmMetric m) { return m == RdmMetric::FIDELITY ? "fidelity" : "hs"; }

KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "baseline") return KernelFamily::BASELINE;
    if (s == "local_subcircuit") return KernelFamily::LOCAL_SUBCIRCUIT;
    if (s == "local_rdm") return KernelFamily::LOCAL_RDM;
    if (s == "multiscale") return KernelFamily::MULTISCALE;
    throw std::invalid_argument("unknown kernel family: " + s);
}

RdmMetric rdm_metric_from_string(const std::string& s) {
    if (s == "fidelity") return RdmMetric::FIDELITY;
    if (s == "hs") return RdmMetric::HS;
    throw std::invalid_argument("unknown rdm metric: " + s);
}

void PatchSet::normalize_weights() {
    if (weights.empty()) {
        weights.assign(patches.size(), 1.0 / static_cast<double>(patches.size()));
        return;
    }
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("PatchSet: negative patch weight");
        sum += w;
    }
    if (sum <= kWeightSumTol) throw std::invalid_argument("PatchSet: weights sum to zero");
    for (double& w : weights) w /= sum;
}

void PatchSet::validate(int d) const {
    if (patches.empty()) throw std::invalid_argument("PatchSet: no patches");
    if (!weights.empty() && weights.size() != patches.size())
        throw std::invalid_argument("PatchSet: weight count mismatch");
    for (const auto& patch : patches) {
        if (patch.empty()) throw std::invalid_argument("PatchSet: empty patch");
        std::vector<bool> seen(static_cast<std::size_t>(d), false);
        for (int q : patch) {
            if (q < 0 || q >= d) throw std::out_of_range("PatchSet: patch index out of range");
            if (seen[static_cast<std::size_t>(q)])
                throw std::invalid_argument("PatchSet: duplicate index in patch");
            seen[static_cast<std::size_t>(q)] = true;
        }
    }
}

void ScaleSpec::normalize_weights() {
    if (alphas.empty()) {
        alphas.assign(scales.size(), 1.0 / static_cast<double>(scales.size()));
        return;
    }
    double sum = 0.0;
    for (double a : alphas) {
        if (a < 0.0) throw std::invalid_argument("ScaleSpec: negative scale weight");
        sum += a;
    }
    if (sum <= kWeightSumTol) throw std::invalid_argument("ScaleSpec: weights sum to zero");
    for (double& a : alphas) a /= sum;
}

void ScaleSpec::validate(int d) const {
    if (scales.empty()) throw std::invalid_argument("ScaleSpec: no scales");
    if (!alphas.empty() && alphas.size() != scales.size())
        throw std::invalid_argument("ScaleSpec: alpha count mismatch");
    for (const auto& scale : scales) {
        PatchSet ps;
        ps.patches = scale;
        ps.validate(d);
    }
}

void KernelConfig::validate() const {
    if (family == KernelFamily::LOCAL_RDM && !rdm_metric)
        throw std::invalid_argument("KernelConfig: local_rdm requires an rdm metric");
    if (family != KernelFamily::LOCAL_RDM && rdm_metric)
        throw std::invalid_argument("KernelConfig: rdm metric only applies to local_rdm");
    if (feature_map.depth < 1) throw std::invalid_argument("KernelConfig: depth must be >= 1");
}

PatchSet default_patches(int d) {
    if (d < 2) throw std::invalid_argument("default_patches: d must be >= 2");
    PatchSet ps;
    for (int q = 0; q + 1 < d; q += 2) ps.patches.push_back({q, q + 1});
    if (d % 2 == 1) ps.patches.push_back({d - 1});
    ps.normalize_weights();
    return ps;
}

ScaleSpec default_scales(int d) {
    if (d < 2) throw std::invalid_argument("default_scales: d must be >= 2");
    ScaleSpec spec;
    spec.scales.push_back(default_patches(d).patches);
    std::vector<int> full(static_cast<std::size_t>(d));
    for (int q = 0; q < d; ++q) full[static_cast<std::size_t>(q)] = q;
    spec.scales.push_back({full});
    spec.alphas = {0.5, 0.5};
    return spec;
}

// --- Gram construction ------------------------------------------------------

namespace {

GramMatrix finish_baseline(Matrix k, const FeatureMapSpec& spec, int qubits) {
    k = symmetrize(k);
    for (std::size_t i = 0; i < k.rows; ++i) k(i, i) = 1.0;
    GramMatrix gm;
    gm.entries = std::move(k);
    gm.meta.family = KernelFamily::BASELINE;
    gm.meta.feature_map = spec;
    gm.meta.qubits = qubits;
    gm.meta.flags = {"symmetrize", "unit_diag"};
    return gm;
}

}  // namespace

GramMatrix baseline_kernel(const std::vector<Statevector>& states) {
    if (states.empty()) throw std::invalid_argument("baseline_kernel: empty input");
    const int d = states[0].num_qubits;
    for (const auto& s : states)
        if (s.num_qubits != d)
            throw std::invalid_argument("baseline_kernel: mixed qubit counts");
    const std::size_t n = states.size();
    Matrix k(n, n);
    parallel_for(0, n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = overlap_sq(states[i], states[j]);
            k(i, j) = v;
            if (i != j) k(j, i) = v;
        }
    });
    FeatureMapSpec unknown_spec;  // meta feature map unknown for raw states
    return finish_baseline(std::move(k), unknown_spec, d);
}

GramMatrix baseline_kernel(const std::vector<FeatureVector>& X, const FeatureMapSpec& spec,
                           int block_size) {
    const int d = feature_dim(X, "baseline_kernel");
    const std::size_t n = X.size();
    const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                           std::max(2, block_size)) / 2);
    Matrix k(n, n);
    for (std::size_t i0 = 0; i0 < n; i0 += block) {
        const std::size_t i1 = std::min(n, i0 + block);
        std::vector<Statevector> rows(i1 - i0);
        parallel_for(i0, i1, [&](std::size_t i) { rows[i - i0] = encode(spec, X[i]); });

        parallel_for(i0, i1, [&](std::size_t i) {
            for (std::size_t j = i; j < i1; ++j) {
                const double v = overlap_sq(rows[i - i0], rows[j - i0]);
                k(i, j) = v;
                if (i != j) k(j, i) = v;
            }
        });
        for (std::size_t j0 = i1; j0 < n; j0 += block) {
            const std::size_t j1 = std::min(n, j0 + block);
            std::vector<Statevector> cols(j1 - j0);
            parallel_for(j0, j1, [&](std::size_t j) { cols[j - j0] = encode(spec, X[j]); });
            parallel_for(i0, i1, [&](std::size_t i) {
                for (std::size_t j = j0; j < j1; ++j) {
                    const double v = overlap_sq(rows[i - i0], cols[j - j0]);
                    k(i, j) = v;
                    k(j, i) = v;
                }
            });
        }
    }
    return finish_baseline(std::move(k), spec, d);
}

GramMatrix local_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config) {
    config.validate();
    if (config.family != KernelFamily::LOCAL_SUBCIRCUIT &&
        config.family != KernelFamily::LOCAL_RDM)
        throw std::invalid_argument("local_kernel: config family is not local");
    const int d = feature_dim(X, "local_kernel");
    const std::size_t n = X.size();

    PatchSet patches = config.patches.value_or(default_patches(d));
    patches.validate(d);
    patches.normalize_weights();

    Matrix accum(n, n);
    if (config.family == KernelFamily::LOCAL_SUBCIRCUIT) {
        for (std::size_t m = 0; m < patches.patches.size(); ++m) {
            const auto& patch = patches.patches[m];
            const double w = patches.weights[m];
            std::vector<Statevector> ps(n);
            parallel_for(0, n, [&](std::size_t i) { ps[i] = encode_patch(config.feature_map, X[i], patch); });
            parallel_for(0, n, [&](std::size_t i) {
                for (std::size_t j = i; j < n; ++j)
                    add_symmetric(accum, i, j, w * overlap_sq(ps[i], ps[j]));
            });
        }
    } else {
        const RdmMetric metric = *config.rdm_metric;
        const std::vector<Statevector> states = encode_all(X, config.feature_map);
        for (std::size_t m = 0; m < patches.patches.size(); ++m) {
            const auto& patch = patches.patches[m];
            const double w = patches.weights[m];
            const std::vector<DensityMatrix> rdms = patch_rdms(states, patch);
            parallel_for(0, n, [&](std::size_t i) {
                // Patch Gram diagonal is pinned to exact self-similarity 1,
                // also for the HS metric where Tr(rho^2) < 1 on mixed marginals.
                accum(i, i) += w;
                for (std::size_t j = i + 1; j < n; ++j)
                    add_symmetric(accum, i, j, w * rdm_similarity(metric, rdms[i], rdms[j]));
            });
        }
    }

    Matrix k = unit_diag_normalize(symmetrize(accum));
    GramMatrix gm;
    gm.meta.family = config.family;
    gm.meta.feature_map = config.feature_map;
    gm.meta.rdm_metric = config.rdm_metric;
    gm.meta.qubits = d;
    gm.meta.flags = {"symmetrize", "unit_diag"};
    if (config.apply_psd_clip) {
        k = unit_diag_normalize(psd_clip(k));
        gm.meta.flags.push_back("psd_clip");
        gm.meta.flags.push_back("unit_diag");
    }
    gm.entries = std::move(k);
    return gm;
}

GramMatrix multiscale_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config) {
    config.validate();
    if (config.family != KernelFamily::MULTISCALE)
        throw std::invalid_argument("multiscale_kernel: config family is not multiscale");
    const int d = feature_dim(X, "multiscale_kernel");
    const std::size_t n = X.size();

    ScaleSpec scales = config.scales.value_or(default_scales(d));
    scales.validate(d);
    scales.normalize_weights();

    const std::vector<Statevector> states = encode_all(X, config.feature_map);

    Matrix k(n, n);
    for (std::size_t s = 0; s < scales.scales.size(); ++s) {
        const auto& scale = scales.scales[s];
        const double alpha = scales.alphas[s];
        Matrix ks(n, n);
        for (const auto& patch : scale) {
            if (patch.size() == static_cast<std::size_t>(d)) {
                parallel_for(0, n, [&](std::size_t i) {
                    for (std::size_t j = i; j < n; ++j)
                        add_symmetric(ks, i, j, overlap_sq(states[i], states[j]));
                });
            } else {
                const std::vector<DensityMatrix> rdms = patch_rdms(states, patch);
                parallel_for(0, n, [&](std::size_t i) {
                    for (std::size_t j = i; j < n; ++j)
                        add_symmetric(ks, i, j, hs_inner(rdms[i], rdms[j]));
                });
            }
        }
        const double inv = 1.0 / static_cast<double>(scale.size());
        for (std::size_t idx = 0; idx < ks.data.size(); ++idx)
            k.data[idx] += alpha * inv * ks.data[idx];
    }

    GramMatrix gm;
    gm.entries = symmetrize(unit_diag_normalize(k));
    gm.meta.family = KernelFamily::MULTISCALE;
    gm.meta.feature_map = config.feature_map;
    gm.meta.qubits = d;
    gm.meta.flags = {"unit_diag", "symmetrize"};
    return gm;
}

GramMatrix compute_kernel(const std::vector<FeatureVector>& X, const KernelConfig& config) {
    config.validate();
    switch (config.family) {
        case KernelFamily::BASELINE:
            return baseline_kernel(X, config.feature_map, config.block_size);
        case KernelFamily::LOCAL_SUBCIRCUIT:
        case KernelFamily::LOCAL_RDM:
            return local_kernel(X, config);
        case KernelFamily::MULTISCALE:
            return multiscale_kernel(X, config);
    }
    throw std::logic_error("compute_kernel: unreachable");
}

// --- Post-processing --------------------------------------------------------

Matrix symmetrize(const Matrix& k) {
    if (!k.square()) throw std::invalid_argument("symmetrize: matrix not square");
    Matrix out(k.rows, k.cols);
    for (std::size_t i = 0; i < k.rows; ++i)
        for (std::size_t j = 0; j < k.cols; ++j) out(i, j) = 0.5 * (k(i, j) + k(j, i));
    return out;
}

Matrix unit_diag_normalize(const Matrix& k) {
    if (!k.square()) throw std::invalid_argument("unit_diag_normalize: matrix not square");
    const std::size_t n = k.rows;
    std::vector<double> inv_root(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dii = k(i, i);
        if (!(dii > 0.0)) {
            std::ostringstream os;
            os << "unit_diag_normalize: non-positive diagonal entry at index " << i;
            throw std::invalid_argument(os.str());
        }
        inv_root[i] = 1.0 / std::sqrt(dii);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = k(i, j) * inv_root[i] * inv_root[j];
    return out;
}

Matrix psd_clip(const Matrix& k) {
    if (!k.square()) throw std::invalid_argument("psd_clip: matrix not square");
    const SymmetricEigenSystem es = symmetric_eig(k);  // rejects asymmetric input
    const std::size_t n = k.rows;
    Matrix out(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const double lam = std::max(0.0, es.eigenvalues[c]);
        if (lam == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double vic = es.eigenvectors(i, c) * lam;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vic * es.eigenvectors(j, c);
        }
    }
    return out;
}

Matrix center(const Matrix& k) {
    if (!k.square()) throw std::invalid_argument("center: matrix not square");
    const std::size_t n = k.rows;
    std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += k(i, j);
            col_mean[j] += k(i, j);
            grand += k(i, j);
        }
    for (std::size_t i = 0; i < n; ++i) row_mean[i] /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) col_mean[j] /= static_cast<double>(n);
    grand /= static_cast<double>(n) * static_cast<double>(n);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = k(i, j) - row_mean[i] - col_mean[j] + grand;
    return out;
}

namespace {

GramMatrix with_flag(const GramMatrix& k, Matrix entries, const char* flag) {
    GramMatrix out;
    out.entries = std::move(entries);
    out.meta = k.meta;
    out.meta.flags.push_back(flag);
    return out;
}

}  // namespace

GramMatrix symmetrize(const GramMatrix& k) {
    return with_flag(k, symmetrize(k.entries), "symmetrize");
}
GramMatrix unit_diag_normalize(const GramMatrix& k) {
    return with_flag(k, unit_diag_normalize(k.entries), "unit_diag");
}
GramMatrix psd_clip(const GramMatrix& k) {
    return with_flag(k, psd_clip(k.entries), "psd_clip");
}
GramMatrix center(const GramMatrix& k) {
    return with_flag(k, center(k.entries), "center");
}

// --- Cross-kernels and Nystrom ----------------------------------------------

Matrix cross_kernel(const std::vector<FeatureVector>& X, const std::vector<FeatureVector>& Z,
                    const KernelConfig& config, int chunk_rows) {
    config.validate();
    if (Z.empty()) throw std::invalid_argument("cross_kernel: empty landmark set");
    const int d = feature_dim(Z, "cross_kernel");
    if (X.empty()) return Matrix(0, Z.size());
    if (feature_dim(X, "cross_kernel") != d)
        throw std::invalid_argument("cross_kernel: sample/landmark dimension mismatch");

    const std::size_t n = X.size();
    const std::size_t m = Z.size();
    const std::size_t chunk = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                           std::max(1, chunk_rows)));
    Matrix c(n, m);

    switch (config.family) {
        case KernelFamily::BASELINE: {
            const std::vector<Statevector> zs = encode_all(Z, config.feature_map);
            for (std::size_t r0 = 0; r0 < n; r0 += chunk) {
                const std::size_t r1 = std::min(n, r0 + chunk);
                std::vector<Statevector> xs(r1 - r0);
                parallel_for(r0, r1, [&](std::size_t i) { xs[i - r0] = encode(config.feature_map, X[i]); });
                parallel_for(r0, r1, [&](std::size_t i) {
                    for (std::size_t j = 0; j < m; ++j) c(i, j) = overlap_sq(xs[i - r0], zs[j]);
                });
            }
            break;
        }
        case KernelFamily::LOCAL_SUBCIRCUIT: {
            PatchSet patches = config.patches.value_or(default_patches(d));
            patches.validate(d);
            patches.normalize_weights();
            std::vector<std::vector<Statevector>> z_patch(patches.patches.size());
            for (std::size_t p = 0; p < patches.patches.size(); ++p) {
                z_patch[p].resize(m);
                parallel_for(0, m, [&](std::size_t j) {
                    z_patch[p][j] = encode_patch(config.feature_map, Z[j], patches.patches[p]);
                });
            }
            for (std::size_t r0 = 0; r0 < n; r0 += chunk) {
                const std::size_t r1 = std::min(n, r0 + chunk);
                for (std::size_t p = 0; p < patches.patches.size(); ++p) {
                    const double w = patches.weights[p];
                    std::vector<Statevector> xs(r1 - r0);
                    parallel_for(r0, r1, [&](std::size_t i) {
                        xs[i - r0] = encode_patch(config.feature_map, X[i], patches.patches[p]);
                    });
                    parallel_for(r0, r1, [&](std::size_t i) {
                        for (std::size_t j = 0; j < m; ++j)
                            c(i, j) += w * overlap_sq(xs[i - r0], z_patch[p][j]);
                    });
                }
            }
            break;
        }
        case KernelFamily::LOCAL_RDM: {
            PatchSet patches = config.patches.value_or(default_patches(d));
            patches.validate(d);
            patches.normalize_weights();
            const RdmMetric metric = *config.rdm_metric;
            const std::vector<Statevector> zs = encode_all(Z, config.feature_map);
            std::vector<std::vector<DensityMatrix>> z_rdms(patches.patches.size());
            for (std::size_t p = 0; p < patches.patches.size(); ++p)
                z_rdms[p] = patch_rdms(zs, patches.patches[p]);
            for (std::size_t r0 = 0; r0 < n; r0 += chunk) {
                const std::size_t r1 = std::min(n, r0 + chunk);
                std::vector<Statevector> xs(r1 - r0);
                parallel_for(r0, r1, [&](std::size_t i) { xs[i - r0] = encode(config.feature_map, X[i]); });
                for (std::size_t p = 0; p < patches.patches.size(); ++p) {
                    const double w = patches.weights[p];
                    std::vector<DensityMatrix> x_rdms(r1 - r0);
                    parallel_for(r0, r1, [&](std::size_t i) {
                        x_rdms[i - r0] = partial_trace(xs[i - r0], patches.patches[p]);
                    });
                    parallel_for(r0, r1, [&](std::size_t i) {
                        for (std::size_t j = 0; j < m; ++j)
                            c(i, j) += w * rdm_similarity(metric, x_rdms[i - r0], z_rdms[p][j]);
                    });
                }
            }
            break;
        }
        case KernelFamily::MULTISCALE: {
            ScaleSpec scales = config.scales.value_or(default_scales(d));
            scales.validate(d);
            scales.normalize_weights();
            const std::vector<Statevector> zs = encode_all(Z, config.feature_map);
            // Precompute landmark RDMs for every small patch of every scale.
            std::vector<std::vector<std::vector<DensityMatrix>>> z_rdms(scales.scales.size());
            for (std::size_t s = 0; s < scales.scales.size(); ++s) {
                const auto& scale = scales.scales[s];
                z_rdms[s].resize(scale.size());
                for (std::size_t p = 0; p < scale.size(); ++p)
                    if (scale[p].size() != static_cast<std::size_t>(d))
                        z_rdms[s][p] = patch_rdms(zs, scale[p]);
            }
            for (std::size_t r0 = 0; r0 < n; r0 += chunk) {
                const std::size_t r1 = std::min(n, r0 + chunk);
                std::vector<Statevector> xs(r1 - r0);
                parallel_for(r0, r1, [&](std::size_t i) { xs[i - r0] = encode(config.feature_map, X[i]); });
                for (std::size_t s = 0; s < scales.scales.size(); ++s) {
                    const auto& scale = scales.scales[s];
                    const double coeff = scales.alphas[s] / static_cast<double>(scale.size());
                    for (std::size_t p = 0; p < scale.size(); ++p) {
                        if (scale[p].size() == static_cast<std::size_t>(d)) {
                            parallel_for(r0, r1, [&](std::size_t i) {
                                for (std::size_t j = 0; j < m; ++j)
                                    c(i, j) += coeff * overlap_sq(xs[i - r0], zs[j]);
                            });
                        } else {
                            std::vector<DensityMatrix> x_rdms(r1 - r0);
                            parallel_for(r0, r1, [&](std::size_t i) {
                                x_rdms[i - r0] = partial_trace(xs[i - r0], scale[p]);
                            });
                            parallel_for(r0, r1, [&](std::size_t i) {
                                for (std::size_t j = 0; j < m; ++j)
                                    c(i, j) += coeff * hs_inner(x_rdms[i - r0], z_rdms[s][p][j]);
                            });
                        }
                    }
                }
            }
            break;
        }
    }
    return c;
}

Matrix nystrom_features(const Matrix& c, const Matrix& w) {
    if (!w.square()) throw std::invalid_argument("nystrom_features: W not square");
    if (w.rows < 1) throw std::invalid_argument("nystrom_features: empty landmark Gram");
    if (c.cols != w.rows)
        throw std::invalid_argument("nystrom_features: C/W shape mismatch");
    const SymmetricEigenSystem es = symmetric_eig(w);  // rejects asymmetric W
    const double lam_max = es.eigenvalues.empty() ? 0.0 : es.eigenvalues[0];
    const double threshold = 1e-10 * lam_max;
    const std::size_t m = w.rows;

    // W^{-1/2} with eigenvalues at or below the threshold zeroed out.
    Matrix root_inv(m, m);
    bool any = false;
    for (std::size_t k = 0; k < m; ++k) {
        const double lam = es.eigenvalues[k];
        if (lam <= threshold || lam <= 0.0) continue;
        any = true;
        const double f = 1.0 / std::sqrt(lam);
        for (std::size_t i = 0; i < m; ++i) {
            const double vik = es.eigenvectors(i, k) * f;
            for (std::size_t j = 0; j < m; ++j) root_inv(i, j) += vik * es.eigenvectors(j, k);
        }
    }
    if (!any)
        throw std::invalid_argument("nystrom_features: all eigenvalues below threshold");
    return matmul(c, root_inv);
}

// --- Persistence -------------------------------------------------------------

namespace {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

void write_doubles_le(std::ofstream& out, const std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            out.write(bytes, 8);
        }
    }
}

void read_doubles_le(std::ifstream& in, std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double& v : values) {
            unsigned char bytes[8];
            in.read(reinterpret_cast<char*>(bytes), 8);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
            v = std::bit_cast<double>(bits);
        }
    }
}

}  // namespace

void save_gram(const std::string& stem, const GramMatrix& gram,
               const std::optional<LabelVector>& labels) {
    namespace fs = std::filesystem;
    const fs::path json_path = fs::path(stem + ".json");
    const fs::path bin_path = fs::path(stem + ".bin");

    nlohmann::ordered_json j;
    j["format"] = "qkonc-gram-v1";
    j["n"] = gram.entries.rows;
    j["family"] = to_string(gram.meta.family);
    j["feature_map"] = {{"family", to_string(gram.meta.feature_map.family)},
                        {"depth", gram.meta.feature_map.depth},
                        {"entanglement", to_string(gram.meta.feature_map.entanglement)}};
    j["qubits"] = gram.meta.qubits;
    j["flags"] = gram.meta.flags;
    if (gram.meta.rdm_metric) j["rdm_metric"] = to_string(*gram.meta.rdm_metric);
    if (labels) j["labels"] = *labels;
    if (!gram.meta.extra.empty()) j["extra"] = gram.meta.extra;
    j["data_file"] = bin_path.filename().string();

    std::ofstream jf(json_path);
    if (!jf) throw std::runtime_error("save_gram: cannot write " + json_path.string());
    jf << j.dump(2) << "\n";

    std::ofstream bf(bin_path, std::ios::binary);
    if (!bf) throw std::runtime_error("save_gram: cannot write " + bin_path.string());
    write_doubles_le(bf, gram.entries.data);
}

LoadedGram load_gram(const std::string& stem_or_json) {
    namespace fs = std::filesystem;
    fs::path json_path(stem_or_json);
    if (json_path.extension() != ".json") json_path = fs::path(stem_or_json + ".json");

    std::ifstream jf(json_path);
    if (!jf) throw std::runtime_error("load_gram: cannot open " + json_path.string());
    nlohmann::json j;
    jf >> j;

    LoadedGram result;
    const std::size_t n = j.at("n").get<std::size_t>();
    result.gram.meta.family = kernel_family_from_string(j.at("family").get<std::string>());
    const auto& fm = j.at("feature_map");
    result.gram.meta.feature_map.family =
        feature_map_family_from_string(fm.at("family").get<std::string>());
    result.gram.meta.feature_map.depth = fm.at("depth").get<int>();
    result.gram.meta.feature_map.entanglement =
        entanglement_from_string(fm.at("entanglement").get<std::string>());
    result.gram.meta.qubits = j.at("qubits").get<int>();
    result.gram.meta.flags = j.at("flags").get<std::vector<std::string>>();
    if (j.contains("rdm_metric"))
        result.gram.meta.rdm_metric = rdm_metric_from_string(j["rdm_metric"].get<std::string>());
    if (j.contains("labels")) result.labels = j["labels"].get<LabelVector>();
    if (j.contains("extra"))
        result.gram.meta.extra = j["extra"].get<std::map<std::string, std::string>>();

    const fs::path bin_path = json_path.parent_path() / j.at("data_file").get<std::string>();
    std::ifstream bf(bin_path, std::ios::binary);
    if (!bf) throw std::runtime_error("load_gram: cannot open " + bin_path.string());
    result.gram.entries = Matrix(n, n);
    read_doubles_le(bf, result.gram.entries.data);
    if (!bf) throw std::runtime_error("load_gram: short read from " + bin_path.string());
    return result;
}

}  // namespace qkonc
