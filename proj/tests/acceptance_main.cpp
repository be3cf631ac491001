// Acceptance suite: end-to-end checks of the kernel constructions, the
// diagnostics, the SVM protocol and the sweep pipeline, each with pinned
// tolerances. Prints one PASS/FAIL line per criterion and exits nonzero if
// any of them fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qkonc/bench.hpp"
#include "qkonc/diagnostics.hpp"
#include "qkonc/kernels.hpp"
#include "qkonc/learn.hpp"

using namespace qkonc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

template <typename Fn>
void run(int id, const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

std::vector<FeatureVector> random_features(std::size_t n, int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureVector> x(n, FeatureVector(static_cast<std::size_t>(d)));
    for (auto& row : x)
        for (auto& v : row) v = rng.next_gaussian();
    return x;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "qkonc_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

// The bundled synthetic benchmark dataset: six tight Gaussian clusters in 16
// dimensions, far apart in every coordinate, labeled by cluster parity.
SweepConfig trend_config(const fs::path& out_dir, std::vector<int> dims) {
    SweepConfig config;
    DatasetSpec ds;
    ds.name = "blobs16";
    ds.synthetic.kind = SyntheticKind::GAUSSIAN_BLOBS;
    ds.synthetic.n = 120;
    ds.synthetic.noise = 0.10;
    ds.synthetic.dim = 16;
    ds.synthetic.clusters = 6;
    ds.synthetic.separation = 8.0;
    config.datasets = {ds};
    config.dims = std::move(dims);
    config.feature_map.family = FeatureMapFamily::ZZ_QISKIT;
    config.feature_map.depth = 1;
    config.feature_map.entanglement = Entanglement::LINEAR;
    config.local_method = KernelFamily::LOCAL_RDM;
    config.rdm_metric = RdmMetric::HS;
    config.seeds = {42};
    config.n_max = 200;
    config.out_dir = out_dir.string();
    return config;
}

using RecordKey = std::pair<std::string, int>;  // family, d

std::map<RecordKey, SweepRecord> index_records(const std::vector<SweepRecord>& records) {
    std::map<RecordKey, SweepRecord> out;
    for (const auto& r : records) out[{r.family, r.d}] = r;
    return out;
}

// Criterion 2/3/4 share one sweep; cache it.
std::map<RecordKey, SweepRecord> g_trend_records;
double g_trend_seconds = 0.0;

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_a = 0.0, worst_b = 0.0, worst_c = 0.0;
    for (int d : {2, 4, 6}) {
        const auto x = random_features(20, d, 1000 + static_cast<std::uint64_t>(d));
        FeatureMapSpec spec;
        spec.family = FeatureMapFamily::ZZ_MANUAL;
        spec.depth = 1;
        const GramMatrix base = baseline_kernel(x, spec);

        std::vector<int> full(static_cast<std::size_t>(d));
        for (int q = 0; q < d; ++q) full[static_cast<std::size_t>(q)] = q;

        KernelConfig rdm;
        rdm.family = KernelFamily::LOCAL_RDM;
        rdm.feature_map = spec;
        rdm.rdm_metric = RdmMetric::HS;
        PatchSet ps;
        ps.patches = {full};
        rdm.patches = ps;
        worst_a = std::max(worst_a, max_abs_diff(local_kernel(x, rdm).entries, base.entries));

        KernelConfig ms;
        ms.family = KernelFamily::MULTISCALE;
        ms.feature_map = spec;
        ScaleSpec ss;
        ss.scales = {{full}};
        ss.alphas = {1.0};
        ms.scales = ss;
        worst_b = std::max(worst_b, max_abs_diff(multiscale_kernel(x, ms).entries, base.entries));

        KernelConfig sub;
        sub.family = KernelFamily::LOCAL_SUBCIRCUIT;
        sub.feature_map = spec;
        sub.patches = ps;
        sub.apply_psd_clip = false;
        worst_c = std::max(worst_c, max_abs_diff(local_kernel(x, sub).entries, base.entries));
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0).count();
    const bool ok = worst_a < 1e-10 && worst_b < 1e-10 && worst_c < 1e-12 && seconds < 10.0;
    report(1, "degenerate-equivalence suite", ok,
           "max dev: rdm-hs " + fmt(worst_a) + ", multiscale " + fmt(worst_b) +
               ", subcircuit " + fmt(worst_c) + "; " + fmt(seconds) + " s (< 10 s)");
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const SweepOutcome outcome =
        run_sweep(trend_config(fresh_dir("trend"), {4, 6, 8, 10, 12}));
    g_trend_seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0).count();
    if (!outcome.failures.empty())
        throw std::runtime_error("sweep failed: " + outcome.failures[0]);
    g_trend_records = index_records(outcome.records);

    bool non_increasing = true;
    const std::vector<int> dims = {4, 6, 8, 10, 12};
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        non_increasing = non_increasing &&
                         g_trend_records[{"baseline", dims[i + 1]}].p50 <=
                             g_trend_records[{"baseline", dims[i]}].p50 + 0.02;
    bool local_above = true;
    for (int d : {8, 10, 12})
        local_above = local_above &&
                      g_trend_records[{"local", d}].p50 > g_trend_records[{"baseline", d}].p50;
    const bool ok = non_increasing && local_above && g_trend_seconds < 300.0;
    report(2, "concentration trend (p50 vs d)", ok,
           "baseline p50 " + fmt(g_trend_records[{"baseline", 4}].p50) + " -> " +
               fmt(g_trend_records[{"baseline", 12}].p50) + ", local at d=12 " +
               fmt(g_trend_records[{"local", 12}].p50) + "; " + fmt(g_trend_seconds) +
               " s (< 300 s)");
}

void criterion_3() {
    if (g_trend_records.empty()) throw std::runtime_error("trend sweep unavailable");
    bool ordered = true;
    for (int d : {4, 6, 8, 10, 12})
        ordered = ordered && g_trend_records[{"local", d}].eff_rank >=
                                 g_trend_records[{"baseline", d}].eff_rank - 0.5;
    const bool strict = g_trend_records[{"local", 12}].eff_rank >
                        g_trend_records[{"baseline", 12}].eff_rank;
    report(3, "effective-rank ordering", ordered && strict,
           "at d=12: local " + fmt(g_trend_records[{"local", 12}].eff_rank) + " vs baseline " +
               fmt(g_trend_records[{"baseline", 12}].eff_rank));
}

void criterion_4() {
    if (g_trend_records.empty()) throw std::runtime_error("trend sweep unavailable");
    const double pb = g_trend_records[{"baseline", 12}].p50;
    const double pm = g_trend_records[{"multiscale", 12}].p50;
    const double pl = g_trend_records[{"local", 12}].p50;
    const bool ok = pb <= pm + 0.02 && pm <= pl + 0.02;
    report(4, "multi-scale intermediacy at d=12", ok,
           "p50 baseline " + fmt(pb) + " <= multiscale " + fmt(pm) + " <= local " + fmt(pl));
}

void criterion_5() {
    const double r_id = effective_rank(Matrix::identity(17));
    const double r_ones = effective_rank(Matrix(5, 5, 1.0));
    const LabelVector y = {0, 0, 1, 1, 2};
    Matrix l(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) l(i, j) = (y[i] == y[j]) ? 1.0 : 0.0;
    const double align = centered_alignment(l, y);
    const auto [p50, p95] = offdiag_percentiles(Matrix::identity(6));
    const bool ok = std::abs(r_id - 17.0) < 1e-9 && std::abs(r_ones - 1.0) < 1e-9 &&
                    std::abs(align - 1.0) < 1e-10 && p50 == 0.0 && p95 == 0.0;
    report(5, "diagnostics closed forms", ok,
           "eff(I)=" + fmt(r_id) + ", eff(ones)=" + fmt(r_ones) + ", align=" + fmt(align) +
               ", identity p50/p95=" + fmt(p50) + "/" + fmt(p95));
}

void criterion_6() {
    Matrix m(2, 2);
    m(0, 0) = 1;
    m(0, 1) = 2;
    m(1, 0) = 2;
    m(1, 1) = 1;
    const Matrix clipped = psd_clip(m);
    double worst = 0.0;
    for (double v : clipped.data) worst = std::max(worst, std::abs(v - 1.5));

    double min_eig = 0.0;
    for (std::uint64_t seed : {7ull, 8ull}) {
        const auto x = random_features(14, 4, seed);
        KernelConfig cfg;
        cfg.family = KernelFamily::LOCAL_RDM;
        cfg.feature_map.family = FeatureMapFamily::ZZ_MANUAL;
        cfg.rdm_metric = RdmMetric::HS;
        const GramMatrix k = local_kernel(x, cfg);
        const auto es = symmetric_eig(symmetrize(k.entries));
        min_eig = std::min(min_eig, es.eigenvalues.back());
    }
    const bool ok = worst < 1e-10 && min_eig >= -1e-9;
    report(6, "PSD clip correctness", ok,
           "clip dev " + fmt(worst) + ", min local-kernel eigenvalue " + fmt(min_eig));
}

void criterion_7() {
    double worst_gap = 0.0;
    bool toys_separable = true;

    // fixed corpus: the 1-D linear instance plus random PSD kernels, n <= 6
    {
        Matrix k(4, 4);
        const std::vector<double> xs = {-2, -1, 1, 2};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) k(i, j) = xs[i] * xs[j];
        const std::vector<int> y = {-1, -1, 1, 1};
        const SvmModel model = svm_train(k, y, 10.0);
        const auto oracle = oracles::svm_dual_grid_oracle(k, y, 10.0);
        worst_gap = std::max(worst_gap,
                             std::abs(svm_dual_objective(model, k, y) - oracle.objective));
        const auto pred = svm_predict(model, k);
        for (std::size_t i = 0; i < 4; ++i) toys_separable = toys_separable && pred[i] == y[i];
    }
    for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
        const std::size_t n = 4 + seed % 3;
        Rng rng(seed);
        Matrix b(n, n + 2);
        for (auto& v : b.data) v = rng.next_gaussian();
        Matrix k = matmul(b, transpose(b));
        for (std::size_t i = 0; i < n; ++i) k(i, i) += 1.0;
        std::vector<int> y(n, -1);
        y[0] = y[1] = 1;
        for (double c : {0.1, 1.0, 10.0}) {
            const SvmModel model = svm_train(k, y, c);
            const auto oracle = oracles::svm_dual_grid_oracle(k, y, c);
            worst_gap = std::max(worst_gap,
                                 std::abs(svm_dual_objective(model, k, y) - oracle.objective));
        }
    }
    {
        // orthogonal toy: training accuracy must be 1
        const Matrix k = Matrix::identity(6);
        std::vector<int> y = {1, -1, 1, -1, 1, -1};
        const auto pred = svm_predict(svm_train(k, y, 10.0), k);
        for (std::size_t i = 0; i < 6; ++i) toys_separable = toys_separable && pred[i] == y[i];
    }
    const bool ok = worst_gap <= 1e-3 && toys_separable;
    report(7, "SMO oracle equivalence", ok,
           "max |dual - oracle| = " + fmt(worst_gap) + " (<= 1e-3), separable toys " +
               (toys_separable ? "exact" : "WRONG"));
}

void criterion_8() {
    const auto x = random_features(40, 4, 2024);
    KernelConfig cfg;
    cfg.family = KernelFamily::BASELINE;
    cfg.feature_map.family = FeatureMapFamily::ZZ_MANUAL;
    const Matrix k = cross_kernel(x, x, cfg);  // PSD fidelity Gram, landmarks = all
    const Matrix phi = nystrom_features(k, k);
    const Matrix rebuilt = matmul(phi, transpose(phi));
    const double dev = max_abs_diff(rebuilt, k);
    report(8, "Nystrom full-landmark reconstruction", dev < 1e-8,
           "max |PhiPhi^T - K| = " + fmt(dev) + " (< 1e-8, n=40, d=4)");
}

void criterion_9() {
    SweepConfig config = parse_config_file(QKONC_SMOKE_CONFIG);
    config.out_dir = fresh_dir("smoke_a").string();
    config.plots = false;
    const SweepOutcome a = run_sweep(config);
    config.out_dir = fresh_dir("smoke_b").string();
    const SweepOutcome b = run_sweep(config);
    if (!a.failures.empty() || a.records.empty())
        throw std::runtime_error("smoke sweep failed");

    bool hashes_match = true;
    std::map<int, std::pair<std::string, std::string>> per_d;
    for (const auto& r : a.records) {
        const auto it = per_d.find(r.d);
        if (it == per_d.end())
            per_d[r.d] = {r.features_hash, r.splits_hash};
        else
            hashes_match = hashes_match && it->second.first == r.features_hash &&
                           it->second.second == r.splits_hash;
    }

    bool reproduced = a.records.size() == b.records.size();
    double worst = 0.0;
    for (std::size_t i = 0; reproduced && i < a.records.size(); ++i) {
        const SweepRecord &ra = a.records[i], &rb = b.records[i];
        reproduced = ra.dataset == rb.dataset && ra.d == rb.d && ra.family == rb.family;
        for (const auto& [va, vb] :
             {std::pair{ra.p50, rb.p50}, {ra.p95, rb.p95}, {ra.eff_rank, rb.eff_rank},
              {ra.alignment, rb.alignment}, {ra.best_c, rb.best_c}, {ra.val_acc, rb.val_acc},
              {ra.test_acc, rb.test_acc}})
            worst = std::max(worst, std::abs(va - vb));
    }
    const bool ok = hashes_match && reproduced && worst <= 1e-12;
    report(9, "matched protocol and rerun determinism", ok,
           std::string("hashes ") + (hashes_match ? "identical" : "DIFFER") +
               ", max rerun deviation " + fmt(worst) + " (<= 1e-12, wall time excluded)");
}

void criterion_10() {
    bool in_grid = true;
    for (const auto& [key, r] : g_trend_records)
        in_grid = in_grid && (r.best_c == 0.1 || r.best_c == 1.0 || r.best_c == 10.0);

    // constructed tie: separable block kernel gives validation accuracy 1 for
    // every C, so the first grid entry must be selected
    const LabelVector y = {0, 0, 1, 1, 0, 1, 0, 1, 0, 1};
    Matrix k(10, 10);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) k(i, j) = (y[i] == y[j]) ? 1.0 : 0.0;
    const SelectionResult tie = select_and_evaluate(k, y, make_splits(10, 5));
    const bool tie_ok = tie.best_c == 0.1 && tie.per_c_val_accuracies.at(0.1) == 1.0 &&
                        tie.per_c_val_accuracies.at(1.0) == 1.0 &&
                        tie.per_c_val_accuracies.at(10.0) == 1.0;
    report(10, "SVM protocol conformance", in_grid && tie_ok,
           std::string("best_C always in {0.1, 1, 10}: ") + (in_grid ? "yes" : "NO") +
               ", tie-break picks 0.1: " + (tie_ok ? "yes" : "NO"));
}

void criterion_11() {
    const fs::path out = fresh_dir("smoke_cli");
    const std::string out_str = out.string();
    std::vector<const char*> argv = {"qkbench", "sweep", "--config", QKONC_SMOKE_CONFIG,
                                     "--out", out_str.c_str()};
    const auto t0 = std::chrono::steady_clock::now();
    const int exit_code =
        cli_main(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool files_ok = exit_code == 0;
    for (const char* name :
         {"records.csv", "p50_vs_d.csv", "p95_vs_d.csv", "effrank_vs_d.csv",
          "testacc_vs_d.csv", "delta_testacc.csv", "mean_delta_per_dataset.csv",
          "tradeoff_scatter.csv", "bestC_vs_d.csv", "spectra_d4.csv", "spectra_d6.csv",
          "spectra_d8.csv"})
        files_ok = files_ok && fs::exists(out / name);
    std::size_t records = 0;
    if (files_ok) records = read_records_csv((out / "records.csv").string()).size();
    const bool ok = files_ok && records >= 6 && seconds < 60.0;
    report(11, "smoke sweep via the CLI", ok,
           fmt(seconds) + " s (< 60 s), " + std::to_string(records) +
               " records, every summary family " + (files_ok ? "present" : "MISSING"));
}

}  // namespace

int main() {
    std::printf("qkonc acceptance suite\n");
    run(1, "degenerate-equivalence suite", criterion_1);
    run(2, "concentration trend (p50 vs d)", criterion_2);
    run(3, "effective-rank ordering", criterion_3);
    run(4, "multi-scale intermediacy at d=12", criterion_4);
    run(5, "diagnostics closed forms", criterion_5);
    run(6, "PSD clip correctness", criterion_6);
    run(7, "SMO oracle equivalence", criterion_7);
    run(8, "Nystrom full-landmark reconstruction", criterion_8);
    run(9, "matched protocol and rerun determinism", criterion_9);
    run(10, "SVM protocol conformance", criterion_10);
    run(11, "smoke sweep via the CLI", criterion_11);
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
