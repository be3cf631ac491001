#pragma once

// Configuration-driven benchmark pipeline: runs the matched sweep over
// datasets x dims x kernel families under identical preprocessing, splits and
// C grid, persists kernels/splits/records, and emits plot-ready summary
// tables (optionally with simple SVG renderings).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkonc/data.hpp"
#include "qkonc/featuremaps.hpp"
#include "qkonc/kernels.hpp"

namespace qkonc {

// Sweep-level family names; "local" resolves to the configured local method.
enum class BenchFamily { BASELINE, LOCAL, MULTISCALE };

std::string to_string(BenchFamily f);
BenchFamily bench_family_from_string(const std::string& s);

struct DatasetSpec {
    std::string name;
    bool is_csv = false;
    SyntheticSpec synthetic;
    bool synthetic_seed_set = false;  // otherwise the sweep seed is used
    std::string csv_path;
    std::string label_column;
    std::optional<std::string> positive_label;
};

// Parses "synthetic <kind> k=v ..." or "csv <path> label=<col> [positive=<v>]".
DatasetSpec parse_dataset_spec(const std::string& name,
                               const std::vector<std::string>& tokens);

struct SweepConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<int> dims = {4, 6, 8, 10, 12, 14, 16, 18, 20};
    std::vector<BenchFamily> families = {BenchFamily::BASELINE, BenchFamily::LOCAL,
                                         BenchFamily::MULTISCALE};
    FeatureMapSpec feature_map;
    KernelFamily local_method = KernelFamily::LOCAL_RDM;
    RdmMetric rdm_metric = RdmMetric::HS;
    std::vector<std::uint64_t> seeds = {42};
    int n_max = 200;
    int block_size = 64;
    std::array<double, 3> split_ratios = {0.6, 0.2, 0.2};
    std::string out_dir = "out";
    bool plots = false;

    void validate() const;
};

// Flat key-value file: `key = value`, '#' comments, repeated `dataset` lines.
SweepConfig parse_config_file(const std::string& path);

// One (dataset, d, family) evaluation.
struct SweepRecord {
    std::string dataset;
    int d = 0;
    std::string family;
    double p50 = 0.0;
    double p95 = 0.0;
    double eff_rank = 0.0;
    double alignment = 0.0;
    double best_c = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double wall_time_seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> spectrum;  // trace-normalized; not part of the CSV row
    std::string features_hash;
    std::string splits_hash;
};

struct SweepOutcome {
    std::vector<SweepRecord> records;  // sorted by (dataset, d, family, seed)
    std::vector<std::string> failures;
};

// Per dataset and d: preprocess once, split once, then evaluate every family
// on identical inputs. Kernels, splits and labels are persisted under
// config.out_dir. Failing datasets are recorded and skipped.
SweepOutcome run_sweep(const SweepConfig& config);

// Writes records.csv plus the per-figure extracts (p50/p95/effrank/testacc vs
// d, test-accuracy deltas vs baseline, mean delta per dataset, tradeoff
// scatter, selected C, per-d spectra) and optional SVG line charts.
void emit_summaries(const std::vector<SweepRecord>& records, const std::string& out_dir,
                    bool svg = false);

void write_records_csv(const std::string& path, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_records_csv(const std::string& path);

// Subcommands: sweep, kernel, diagnose, plot. Returns the process exit code:
// 0 success, 1 invalid config or runtime failure, 2 usage errors.
int cli_main(int argc, char** argv);

}  // namespace qkonc
