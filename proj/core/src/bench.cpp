#include "qkonc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "CLI11.hpp"

#include "qkonc/diagnostics.hpp"
#include "qkonc/learn.hpp"

namespace fs = std::filesystem;

namespace qkonc {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::invalid_argument("invalid number for " + what + ": '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::invalid_argument("invalid integer for " + what + ": '" + s + "'");
    }
}

}  // namespace

std::string to_string(BenchFamily f) {
    switch (f) {
        case BenchFamily::BASELINE: return "baseline";
        case BenchFamily::LOCAL: return "local";
        case BenchFamily::MULTISCALE: return "multiscale";
    }
    return "?";
}

BenchFamily bench_family_from_string(const std::string& s) {
    if (s == "baseline") return BenchFamily::BASELINE;
    if (s == "local") return BenchFamily::LOCAL;
    if (s == "multiscale") return BenchFamily::MULTISCALE;
    throw std::invalid_argument("unknown family: " + s + " (expected baseline|local|multiscale)");
}

DatasetSpec parse_dataset_spec(const std::string& name,
                               const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("dataset spec is empty");
    DatasetSpec spec;
    spec.name = name;
    std::size_t next = 1;
    if (tokens[0] == "synthetic") {
        if (tokens.size() < 2)
            throw std::invalid_argument("synthetic dataset needs a kind");
        spec.synthetic.kind = synthetic_kind_from_string(tokens[1]);
        if (spec.synthetic.kind == SyntheticKind::GAUSSIAN_BLOBS) spec.synthetic.dim = 2;
        next = 2;
        for (; next < tokens.size(); ++next) {
            const auto eq = tokens[next].find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("bad synthetic option: " + tokens[next]);
            const std::string key = tokens[next].substr(0, eq);
            const std::string value = tokens[next].substr(eq + 1);
            if (key == "n")
                spec.synthetic.n = static_cast<int>(parse_long(value, "n"));
            else if (key == "noise")
                spec.synthetic.noise = parse_double(value, "noise");
            else if (key == "seed") {
                spec.synthetic.seed = static_cast<std::uint64_t>(parse_long(value, "seed"));
                spec.synthetic_seed_set = true;
            } else if (key == "dim")
                spec.synthetic.dim = static_cast<int>(parse_long(value, "dim"));
            else if (key == "clusters")
                spec.synthetic.clusters = static_cast<int>(parse_long(value, "clusters"));
            else if (key == "separation")
                spec.synthetic.separation = parse_double(value, "separation");
            else
                throw std::invalid_argument("unknown synthetic option: " + key);
        }
    } else if (tokens[0] == "csv") {
        if (tokens.size() < 2) throw std::invalid_argument("csv dataset needs a path");
        spec.is_csv = true;
        spec.csv_path = tokens[1];
        next = 2;
        for (; next < tokens.size(); ++next) {
            const auto eq = tokens[next].find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("bad csv option: " + tokens[next]);
            const std::string key = tokens[next].substr(0, eq);
            const std::string value = tokens[next].substr(eq + 1);
            if (key == "label")
                spec.label_column = value;
            else if (key == "positive")
                spec.positive_label = value;
            else
                throw std::invalid_argument("unknown csv option: " + key);
        }
        if (spec.label_column.empty())
            throw std::invalid_argument("csv dataset needs label=<column>");
    } else {
        throw std::invalid_argument("dataset source must be 'synthetic' or 'csv', got '" +
                                    tokens[0] + "'");
    }
    return spec;
}

void SweepConfig::validate() const {
    if (datasets.empty()) throw std::invalid_argument("config: no datasets");
    if (dims.empty()) throw std::invalid_argument("config: dims is empty");
    for (int d : dims)
        if (d < 2) throw std::invalid_argument("config: every dim must be >= 2");
    if (families.empty()) throw std::invalid_argument("config: families is empty");
    if (n_max < 10) throw std::invalid_argument("config: n_max must be >= 10");
    if (seeds.empty()) throw std::invalid_argument("config: no seeds");
    if (local_method != KernelFamily::LOCAL_RDM &&
        local_method != KernelFamily::LOCAL_SUBCIRCUIT)
        throw std::invalid_argument("config: local_method must be rdm or subcircuit");
}

SweepConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    SweepConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config: line " << line_no << " is not 'key = value'";
            throw std::invalid_argument(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "out_dir") {
            config.out_dir = value;
        } else if (key == "dims") {
            config.dims.clear();
            for (const auto& tok : split(value, ','))
                config.dims.push_back(static_cast<int>(parse_long(tok, "dims")));
        } else if (key == "families") {
            config.families.clear();
            for (const auto& tok : split(value, ','))
                config.families.push_back(bench_family_from_string(tok));
        } else if (key == "feature_map") {
            config.feature_map.family = feature_map_family_from_string(value);
        } else if (key == "depth") {
            config.feature_map.depth = static_cast<int>(parse_long(value, "depth"));
        } else if (key == "entanglement") {
            config.feature_map.entanglement = entanglement_from_string(value);
        } else if (key == "local_method") {
            if (value == "rdm")
                config.local_method = KernelFamily::LOCAL_RDM;
            else if (value == "subcircuit")
                config.local_method = KernelFamily::LOCAL_SUBCIRCUIT;
            else
                throw std::invalid_argument("config: local_method must be rdm or subcircuit");
        } else if (key == "rdm_metric") {
            config.rdm_metric = rdm_metric_from_string(value);
        } else if (key == "seed") {
            config.seeds = {static_cast<std::uint64_t>(parse_long(value, "seed"))};
        } else if (key == "seeds") {
            config.seeds.clear();
            for (const auto& tok : split(value, ','))
                config.seeds.push_back(static_cast<std::uint64_t>(parse_long(tok, "seeds")));
        } else if (key == "n_max") {
            config.n_max = static_cast<int>(parse_long(value, "n_max"));
        } else if (key == "block_size") {
            config.block_size = static_cast<int>(parse_long(value, "block_size"));
        } else if (key == "ratios") {
            const auto parts = split(value, ',');
            if (parts.size() != 3)
                throw std::invalid_argument("config: ratios needs three values");
            for (std::size_t i = 0; i < 3; ++i)
                config.split_ratios[i] = parse_double(parts[i], "ratios");
        } else if (key == "plots") {
            config.plots = (value == "true" || value == "1" || value == "yes");
        } else if (key == "dataset") {
            const auto tokens = whitespace_tokens(value);
            if (tokens.size() < 2)
                throw std::invalid_argument("config: dataset needs '<name> <source> ...'");
            config.datasets.push_back(parse_dataset_spec(
                tokens[0], std::vector<std::string>(tokens.begin() + 1, tokens.end())));
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

namespace {

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t default_seed) {
    Dataset ds;
    if (spec.is_csv) {
        ds = load_csv(spec.csv_path, spec.label_column, spec.positive_label);
    } else {
        SyntheticSpec syn = spec.synthetic;
        if (!spec.synthetic_seed_set) syn.seed = default_seed;
        ds = make_synthetic(syn);
    }
    ds.name = spec.name;
    return ds;
}

// First n_max indices of the seeded shuffle, in ascending row order.
Dataset subsample(const Dataset& ds, std::size_t n_max, std::uint64_t seed) {
    if (ds.n() <= n_max) return ds;
    std::vector<std::size_t> perm = seeded_permutation(ds.n(), seed);
    perm.resize(n_max);
    std::sort(perm.begin(), perm.end());
    Dataset out;
    out.name = ds.name;
    out.feature_names = ds.feature_names;
    out.features = Matrix(n_max, ds.p());
    out.labels.resize(n_max);
    for (std::size_t i = 0; i < n_max; ++i) {
        for (std::size_t j = 0; j < ds.p(); ++j) out.features(i, j) = ds.features(perm[i], j);
        out.labels[i] = ds.labels[perm[i]];
    }
    return out;
}

Matrix reduce_to_dim(const Matrix& standardized, int d) {
    if (standardized.cols == static_cast<std::size_t>(d)) return standardized;
    if (standardized.cols > static_cast<std::size_t>(d)) return pca_reduce(standardized, d);
    return augment_pairwise(standardized, d);
}

std::vector<FeatureVector> matrix_rows(const Matrix& m) {
    std::vector<FeatureVector> rows(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) rows[i] = m.row(i);
    return rows;
}

KernelConfig family_kernel_config(const SweepConfig& config, BenchFamily family) {
    KernelConfig kc;
    kc.feature_map = config.feature_map;
    kc.block_size = config.block_size;
    switch (family) {
        case BenchFamily::BASELINE:
            kc.family = KernelFamily::BASELINE;
            break;
        case BenchFamily::LOCAL:
            kc.family = config.local_method;
            if (config.local_method == KernelFamily::LOCAL_RDM)
                kc.rdm_metric = config.rdm_metric;
            break;
        case BenchFamily::MULTISCALE:
            kc.family = KernelFamily::MULTISCALE;
            break;
    }
    return kc;
}

}  // namespace

SweepOutcome run_sweep(const SweepConfig& config) {
    config.validate();
    SweepOutcome outcome;
    const fs::path out_dir(config.out_dir);
    const fs::path kernel_dir = out_dir / "kernels";
    const fs::path split_dir = out_dir / "splits";
    fs::create_directories(kernel_dir);
    fs::create_directories(split_dir);

    for (const DatasetSpec& spec : config.datasets) {
        try {
            const Dataset raw = load_dataset(spec, config.seeds.front());
            for (std::uint64_t seed : config.seeds) {
                const Dataset ds = subsample(raw, static_cast<std::size_t>(config.n_max), seed);
                const Matrix standardized = standardize(ds.features);
                for (int d : config.dims) {
                    const Matrix feats = reduce_to_dim(standardized, d);
                    const std::string features_hash = matrix_hash(feats);
                    const SplitIndices splits =
                        make_splits(feats.rows, seed, config.split_ratios);
                    std::ostringstream base;
                    base << ds.name << "_d" << d << "_s" << seed;
                    const std::string split_path =
                        (split_dir / (base.str() + ".splits.json")).string();
                    save_splits(split_path, splits);
                    const std::string splits_hash = file_hash(split_path);
                    const std::vector<FeatureVector> rows = matrix_rows(feats);

                    for (BenchFamily family : config.families) {
                        const auto t0 = std::chrono::steady_clock::now();
                        const KernelConfig kc = family_kernel_config(config, family);
                        GramMatrix gram = compute_kernel(rows, kc);
                        const DiagnosticsReport diag =
                            compute_diagnostics(gram.entries, ds.labels);
                        const SelectionResult sel =
                            select_and_evaluate(gram.entries, ds.labels, splits);
                        const auto t1 = std::chrono::steady_clock::now();

                        gram.meta.extra["dataset"] = ds.name;
                        gram.meta.extra["d"] = std::to_string(d);
                        gram.meta.extra["seed"] = std::to_string(seed);
                        gram.meta.extra["features_hash"] = features_hash;
                        gram.meta.extra["splits_hash"] = splits_hash;
                        gram.meta.extra["splits_file"] = base.str() + ".splits.json";
                        save_gram((kernel_dir / (base.str() + "_" + to_string(family))).string(),
                                  gram, ds.labels);

                        SweepRecord rec;
                        rec.dataset = ds.name;
                        rec.d = d;
                        rec.family = to_string(family);
                        rec.p50 = diag.p50;
                        rec.p95 = diag.p95;
                        rec.eff_rank = diag.effective_rank;
                        rec.alignment = diag.alignment.value_or(0.0);
                        rec.best_c = sel.best_c;
                        rec.val_acc = sel.val_accuracy;
                        rec.test_acc = sel.test_accuracy;
                        rec.wall_time_seconds =
                            std::chrono::duration<double>(t1 - t0).count();
                        rec.seed = seed;
                        rec.spectrum = diag.spectrum;
                        rec.features_hash = features_hash;
                        rec.splits_hash = splits_hash;
                        outcome.records.push_back(std::move(rec));
                    }
                }
            }
        } catch (const std::exception& e) {
            outcome.failures.push_back("dataset '" + spec.name + "': " + e.what());
        }
    }

    std::stable_sort(outcome.records.begin(), outcome.records.end(),
                     [](const SweepRecord& a, const SweepRecord& b) {
                         return std::tie(a.dataset, a.d, a.family, a.seed) <
                                std::tie(b.dataset, b.d, b.family, b.seed);
                     });
    return outcome;
}

// --- Records CSV --------------------------------------------------------------

void write_records_csv(const std::string& path, const std::vector<SweepRecord>& records) {
    std::set<std::uint64_t> seeds;
    for (const auto& r : records) seeds.insert(r.seed);
    const bool with_seed = seeds.size() > 1;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "dataset,d,family,p50,p95,eff_rank,alignment,best_C,val_acc,test_acc,"
           "wall_time_seconds";
    if (with_seed) out << ",seed";
    out << "\n";
    for (const auto& r : records) {
        out << r.dataset << ',' << r.d << ',' << r.family << ',' << fmt_double(r.p50) << ','
            << fmt_double(r.p95) << ',' << fmt_double(r.eff_rank) << ','
            << fmt_double(r.alignment) << ',' << fmt_double(r.best_c) << ','
            << fmt_double(r.val_acc) << ',' << fmt_double(r.test_acc) << ','
            << fmt_double(r.wall_time_seconds);
        if (with_seed) out << ',' << r.seed;
        out << "\n";
    }
}

std::vector<SweepRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty records file " + path);
    std::vector<std::string> header;
    {
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(trim(cell));
    }
    const auto column = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };
    const std::ptrdiff_t c_dataset = column("dataset"), c_d = column("d"),
                         c_family = column("family"), c_p50 = column("p50"),
                         c_p95 = column("p95"), c_eff = column("eff_rank"),
                         c_align = column("alignment"), c_bestc = column("best_C"),
                         c_val = column("val_acc"), c_test = column("test_acc"),
                         c_wall = column("wall_time_seconds"), c_seed = column("seed");
    for (std::ptrdiff_t c : {c_dataset, c_d, c_family, c_p50, c_p95, c_eff, c_align, c_bestc,
                             c_val, c_test})
        if (c < 0) throw std::runtime_error("records file missing required columns: " + path);

    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        const auto get = [&](std::ptrdiff_t c) -> std::string {
            if (c < 0 || static_cast<std::size_t>(c) >= cells.size())
                throw std::runtime_error("short row in records file " + path);
            return cells[static_cast<std::size_t>(c)];
        };
        SweepRecord r;
        r.dataset = get(c_dataset);
        r.d = static_cast<int>(parse_long(get(c_d), "d"));
        r.family = get(c_family);
        r.p50 = parse_double(get(c_p50), "p50");
        r.p95 = parse_double(get(c_p95), "p95");
        r.eff_rank = parse_double(get(c_eff), "eff_rank");
        r.alignment = parse_double(get(c_align), "alignment");
        r.best_c = parse_double(get(c_bestc), "best_C");
        r.val_acc = parse_double(get(c_val), "val_acc");
        r.test_acc = parse_double(get(c_test), "test_acc");
        if (c_wall >= 0 && static_cast<std::size_t>(c_wall) < cells.size())
            r.wall_time_seconds = parse_double(get(c_wall), "wall_time_seconds");
        if (c_seed >= 0 && static_cast<std::size_t>(c_seed) < cells.size())
            r.seed = static_cast<std::uint64_t>(parse_long(get(c_seed), "seed"));
        records.push_back(std::move(r));
    }
    return records;
}

// --- Summary tables and charts -------------------------------------------------

namespace {

struct SeriesKey {
    std::string dataset;
    std::string family;
    bool operator<(const SeriesKey& o) const {
        return std::tie(dataset, family) < std::tie(o.dataset, o.family);
    }
};

using GroupKey = std::tuple<std::string, std::string, int>;  // dataset, family, d

struct Aggregate {
    double p50 = 0, p95 = 0, eff_rank = 0, test_acc = 0, alignment = 0;
    std::size_t count = 0;
};

std::map<GroupKey, Aggregate> aggregate_over_seeds(const std::vector<SweepRecord>& records) {
    std::map<GroupKey, Aggregate> groups;
    for (const auto& r : records) {
        Aggregate& a = groups[{r.dataset, r.family, r.d}];
        a.p50 += r.p50;
        a.p95 += r.p95;
        a.eff_rank += r.eff_rank;
        a.test_acc += r.test_acc;
        a.alignment += r.alignment;
        a.count += 1;
    }
    for (auto& [key, a] : groups) {
        const double inv = 1.0 / static_cast<double>(a.count);
        a.p50 *= inv;
        a.p95 *= inv;
        a.eff_rank *= inv;
        a.test_acc *= inv;
        a.alignment *= inv;
    }
    return groups;
}

void write_metric_vs_d(const std::string& path, const std::map<GroupKey, Aggregate>& groups,
                       const std::string& metric_name, double Aggregate::*field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "dataset,family,d," << metric_name << "\n";
    for (const auto& [key, agg] : groups)
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
            << fmt_double(agg.*field) << "\n";
}

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& ylabel, std::vector<ChartSeries> series) {
    for (auto& s : series) std::sort(s.points.begin(), s.points.end());
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) return;  // nothing to draw
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    const double pad = std::max(1e-12, 0.05 * (ymax - ymin));
    ymin -= pad;
    ymax += pad;

    const double w = 720, h = 480, l = 70, r = 190, t = 46, b = 50;
    const auto sx = [&](double x) { return l + (x - xmin) / (xmax - xmin) * (w - l - r); };
    const auto sy = [&](double y) { return h - b - (y - ymin) / (ymax - ymin) * (h - t - b); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "' viewBox='0 0 " << w << " " << h << "'>\n";
    out << "<rect width='" << w << "' height='" << h << "' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<line x1='" << l << "' y1='" << h - b << "' x2='" << w - r << "' y2='" << h - b
        << "' stroke='black'/>\n";
    out << "<line x1='" << l << "' y1='" << t << "' x2='" << l << "' y2='" << h - b
        << "' stroke='black'/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = ymin + (ymax - ymin) * k / 4.0;
        out << "<text x='" << l - 6 << "' y='" << sy(y) + 4
            << "' text-anchor='end' font-size='11'>";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", y);
        out << buf << "</text>\n";
        out << "<line x1='" << l << "' y1='" << sy(y) << "' x2='" << w - r << "' y2='" << sy(y)
            << "' stroke='#dddddd'/>\n";
    }
    std::set<double> xticks;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) xticks.insert(x);
    for (double x : xticks) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", x);
        out << "<text x='" << sx(x) << "' y='" << h - b + 18
            << "' text-anchor='middle' font-size='11'>" << buf << "</text>\n";
    }
    out << "<text x='16' y='" << (t + h - b) / 2 << "' font-size='12' transform='rotate(-90 16 "
        << (t + h - b) / 2 << ")' text-anchor='middle'>" << ylabel << "</text>\n";
    out << "<text x='" << (l + w - r) / 2 << "' y='" << h - 12
        << "' text-anchor='middle' font-size='12'>d</text>\n";

    std::size_t idx = 0;
    for (const auto& s : series) {
        const char* color = kPalette[idx % 8];
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (const auto& [x, y] : s.points) out << sx(x) << ',' << sy(y) << ' ';
        out << "'/>\n";
        for (const auto& [x, y] : s.points)
            out << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='3' fill='" << color
                << "'/>\n";
        const double ly = t + 16.0 * static_cast<double>(idx);
        out << "<rect x='" << w - r + 10 << "' y='" << ly << "' width='10' height='10' fill='"
            << color << "'/>\n";
        out << "<text x='" << w - r + 25 << "' y='" << ly + 9 << "' font-size='11'>" << s.name
            << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
}

void chart_from_groups(const std::string& path, const std::string& title,
                       const std::string& ylabel, const std::map<GroupKey, Aggregate>& groups,
                       double Aggregate::*field) {
    std::map<SeriesKey, ChartSeries> by_series;
    for (const auto& [key, agg] : groups) {
        const SeriesKey sk{std::get<0>(key), std::get<1>(key)};
        auto& s = by_series[sk];
        s.name = sk.dataset + "/" + sk.family;
        s.points.emplace_back(static_cast<double>(std::get<2>(key)), agg.*field);
    }
    std::vector<ChartSeries> series;
    for (auto& [key, s] : by_series) series.push_back(std::move(s));
    write_line_chart(path, title, ylabel, std::move(series));
}

}  // namespace

void emit_summaries(const std::vector<SweepRecord>& records, const std::string& out_dir,
                    bool svg) {
    if (records.empty()) throw std::invalid_argument("emit_summaries: no records");
    fs::create_directories(out_dir);
    const fs::path base(out_dir);

    write_records_csv((base / "records.csv").string(), records);

    const std::map<GroupKey, Aggregate> groups = aggregate_over_seeds(records);
    write_metric_vs_d((base / "p50_vs_d.csv").string(), groups, "p50", &Aggregate::p50);
    write_metric_vs_d((base / "p95_vs_d.csv").string(), groups, "p95", &Aggregate::p95);
    write_metric_vs_d((base / "effrank_vs_d.csv").string(), groups, "eff_rank",
                      &Aggregate::eff_rank);
    write_metric_vs_d((base / "testacc_vs_d.csv").string(), groups, "test_acc",
                      &Aggregate::test_acc);

    // Test-accuracy deltas vs the baseline family; baseline rows are excluded
    // by definition.
    std::map<GroupKey, double> deltas;
    {
        std::ofstream out(base / "delta_testacc.csv");
        out << "dataset,family,d,delta_test_acc\n";
        for (const auto& [key, agg] : groups) {
            const auto& [dataset, family, d] = key;
            if (family == "baseline") continue;
            const auto it = groups.find({dataset, "baseline", d});
            if (it == groups.end()) continue;
            const double delta = agg.test_acc - it->second.test_acc;
            deltas[key] = delta;
            out << dataset << ',' << family << ',' << d << ',' << fmt_double(delta) << "\n";
        }
    }
    {
        std::ofstream out(base / "mean_delta_per_dataset.csv");
        out << "dataset,family,mean_delta_test_acc\n";
        std::map<SeriesKey, std::pair<double, std::size_t>> acc;
        for (const auto& [key, delta] : deltas) {
            auto& slot = acc[{std::get<0>(key), std::get<1>(key)}];
            slot.first += delta;
            slot.second += 1;
        }
        for (const auto& [key, slot] : acc)
            out << key.dataset << ',' << key.family << ','
                << fmt_double(slot.first / static_cast<double>(slot.second)) << "\n";
    }
    {
        std::ofstream out(base / "tradeoff_scatter.csv");
        out << "dataset,family,d,p50,test_acc\n";
        for (const auto& [key, agg] : groups)
            out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
                << fmt_double(agg.p50) << ',' << fmt_double(agg.test_acc) << "\n";
    }
    {
        std::set<std::uint64_t> seeds;
        for (const auto& r : records) seeds.insert(r.seed);
        std::ofstream out(base / "bestC_vs_d.csv");
        out << "dataset,family,d,best_C" << (seeds.size() > 1 ? ",seed" : "") << "\n";
        for (const auto& r : records) {
            out << r.dataset << ',' << r.family << ',' << r.d << ',' << fmt_double(r.best_c);
            if (seeds.size() > 1) out << ',' << r.seed;
            out << "\n";
        }
    }

    // Per-d spectra: one row per (dataset, family, seed) with the
    // trace-normalized eigenvalues, plus a mean row when several seeds ran.
    std::set<int> dims;
    bool have_spectra = false;
    for (const auto& r : records) {
        dims.insert(r.d);
        have_spectra = have_spectra || !r.spectrum.empty();
    }
    if (have_spectra) {
        for (int d : dims) {
            std::ofstream out(base / ("spectra_d" + std::to_string(d) + ".csv"));
            out << "dataset,family,seed,eigenvalues...\n";
            std::map<SeriesKey, std::vector<const SweepRecord*>> per_series;
            for (const auto& r : records)
                if (r.d == d && !r.spectrum.empty())
                    per_series[{r.dataset, r.family}].push_back(&r);
            for (const auto& [key, recs] : per_series) {
                for (const SweepRecord* r : recs) {
                    out << key.dataset << ',' << key.family << ',' << r->seed;
                    for (double v : r->spectrum) out << ',' << fmt_double(v);
                    out << "\n";
                }
                if (recs.size() > 1) {
                    std::vector<double> mean(recs[0]->spectrum.size(), 0.0);
                    for (const SweepRecord* r : recs)
                        for (std::size_t i = 0; i < mean.size() && i < r->spectrum.size(); ++i)
                            mean[i] += r->spectrum[i];
                    out << key.dataset << ',' << key.family << ",mean";
                    for (double v : mean)
                        out << ',' << fmt_double(v / static_cast<double>(recs.size()));
                    out << "\n";
                }
            }
        }
    }

    if (svg) {
        chart_from_groups((base / "p50_vs_d.svg").string(), "Off-diagonal median vs d", "p50",
                          groups, &Aggregate::p50);
        chart_from_groups((base / "p95_vs_d.svg").string(), "Off-diagonal p95 vs d", "p95",
                          groups, &Aggregate::p95);
        chart_from_groups((base / "effrank_vs_d.svg").string(), "Effective rank vs d",
                          "effective rank", groups, &Aggregate::eff_rank);
        chart_from_groups((base / "testacc_vs_d.svg").string(), "Test accuracy vs d",
                          "test accuracy", groups, &Aggregate::test_acc);
    }
}

// --- CLI -----------------------------------------------------------------------

namespace {

int cmd_sweep(const std::string& config_path, const std::optional<std::string>& out,
              const std::optional<std::uint64_t>& seed, const std::optional<std::string>& dims,
              const std::optional<std::string>& families, const std::optional<int>& nmax,
              bool svg) {
    SweepConfig config = parse_config_file(config_path);
    if (out) config.out_dir = *out;
    if (seed) config.seeds = {*seed};
    if (dims) {
        config.dims.clear();
        for (const auto& tok : split(*dims, ','))
            config.dims.push_back(static_cast<int>(parse_long(tok, "dims")));
    }
    if (families) {
        config.families.clear();
        for (const auto& tok : split(*families, ','))
            config.families.push_back(bench_family_from_string(tok));
    }
    if (nmax) config.n_max = *nmax;
    if (svg) config.plots = true;
    config.validate();

    const SweepOutcome outcome = run_sweep(config);
    for (const auto& failure : outcome.failures) std::cerr << "warning: " << failure << "\n";
    if (outcome.records.empty()) {
        std::cerr << "error: sweep produced no records\n";
        return 1;
    }
    emit_summaries(outcome.records, config.out_dir, config.plots);
    std::cout << "wrote " << outcome.records.size() << " records to " << config.out_dir
              << "/records.csv\n";
    return 0;
}

int cmd_kernel(const std::string& dataset_arg, const std::string& name, int d,
               const std::string& family, const std::string& out_stem,
               const FeatureMapSpec& fm, const std::string& local_method,
               const std::string& rdm_metric, std::uint64_t seed, int nmax, int block_size) {
    const DatasetSpec spec = parse_dataset_spec(name, whitespace_tokens(dataset_arg));
    SweepConfig config;
    config.feature_map = fm;
    config.block_size = block_size;
    config.local_method = local_method == "subcircuit" ? KernelFamily::LOCAL_SUBCIRCUIT
                                                       : KernelFamily::LOCAL_RDM;
    config.rdm_metric = rdm_metric_from_string(rdm_metric);

    Dataset ds = load_dataset(spec, seed);
    ds = subsample(ds, static_cast<std::size_t>(nmax), seed);
    const Matrix feats = reduce_to_dim(standardize(ds.features), d);
    const std::vector<FeatureVector> rows = matrix_rows(feats);

    const KernelConfig kc = family_kernel_config(config, bench_family_from_string(family));
    GramMatrix gram = compute_kernel(rows, kc);
    gram.meta.extra["dataset"] = ds.name;
    gram.meta.extra["d"] = std::to_string(d);
    gram.meta.extra["seed"] = std::to_string(seed);
    gram.meta.extra["features_hash"] = matrix_hash(feats);
    save_gram(out_stem, gram, ds.labels);
    std::cout << "wrote " << out_stem << ".json and " << out_stem << ".bin (n="
              << gram.entries.rows << ", family=" << to_string(gram.meta.family) << ")\n";
    return 0;
}

int cmd_diagnose(const std::string& gram_path) {
    const LoadedGram loaded = load_gram(gram_path);
    const DiagnosticsReport report = compute_diagnostics(loaded.gram.entries, loaded.labels);
    std::cout << "n: " << loaded.gram.entries.rows << "\n";
    std::cout << "family: " << to_string(loaded.gram.meta.family) << "\n";
    std::cout << "feature_map: " << to_string(loaded.gram.meta.feature_map.family)
              << " depth=" << loaded.gram.meta.feature_map.depth
              << " entanglement=" << to_string(loaded.gram.meta.feature_map.entanglement)
              << "\n";
    std::cout << "p50: " << fmt_double(report.p50) << "\n";
    std::cout << "p95: " << fmt_double(report.p95) << "\n";
    std::cout << "eff_rank: " << fmt_double(report.effective_rank) << "\n";
    if (report.alignment)
        std::cout << "alignment: " << fmt_double(*report.alignment) << "\n";
    else
        std::cout << "alignment: n/a (no labels stored)\n";
    return 0;
}

int cmd_plot(const std::string& records_path, const std::string& out_dir, bool svg) {
    const std::vector<SweepRecord> records = read_records_csv(records_path);
    if (records.empty()) {
        std::cerr << "error: no records in " << records_path << "\n";
        return 1;
    }
    emit_summaries(records, out_dir, svg);
    std::cout << "wrote summaries for " << records.size() << " records to " << out_dir << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"qkonc: fidelity quantum kernels, concentration diagnostics and SVM sweeps"};
    app.require_subcommand(1);

    auto* sweep = app.add_subcommand("sweep", "run a configured dataset x d x family sweep");
    std::string config_path;
    std::optional<std::string> out_override, dims_override, families_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> nmax_override;
    bool sweep_svg = false;
    sweep->add_option("--config", config_path, "sweep config file")->required();
    sweep->add_option("--out", out_override, "output directory override");
    sweep->add_option("--seed", seed_override, "single seed override");
    sweep->add_option("--dims", dims_override, "comma-separated dims override");
    sweep->add_option("--families", families_override, "comma-separated families override");
    sweep->add_option("--nmax", nmax_override, "subsample cap override");
    sweep->add_flag("--svg", sweep_svg, "render SVG charts");

    auto* kernel = app.add_subcommand("kernel", "compute and save one Gram matrix");
    std::string k_dataset, k_name = "dataset", k_family = "baseline", k_out;
    std::string k_fm = "zz_manual", k_ent = "linear", k_local = "rdm", k_metric = "hs";
    int k_d = 4, k_depth = 1, k_nmax = 200, k_block = 64;
    std::uint64_t k_seed = 42;
    kernel->add_option("--dataset", k_dataset,
                       "dataset spec, e.g. 'synthetic gaussian_blobs n=120 noise=0.3 dim=16' "
                       "or 'csv file.csv label=target'")
        ->required();
    kernel->add_option("--name", k_name, "dataset name used in metadata");
    kernel->add_option("--d", k_d, "target feature dimension / qubit count")->required();
    kernel->add_option("--family", k_family, "baseline|local|multiscale")->required();
    kernel->add_option("--out", k_out, "output stem (<stem>.json/.bin)")->required();
    kernel->add_option("--feature-map", k_fm, "zz_manual|zz_manual_canonical|zz_qiskit");
    kernel->add_option("--depth", k_depth, "feature map layers");
    kernel->add_option("--entanglement", k_ent, "linear|ring");
    kernel->add_option("--local-method", k_local, "rdm|subcircuit");
    kernel->add_option("--rdm-metric", k_metric, "hs|fidelity");
    kernel->add_option("--seed", k_seed, "seed for synthetic data / subsampling");
    kernel->add_option("--nmax", k_nmax, "subsample cap");
    kernel->add_option("--block-size", k_block, "baseline statevector block size");

    auto* diagnose = app.add_subcommand("diagnose", "print diagnostics for a saved Gram");
    std::string g_path;
    diagnose->add_option("--gram", g_path, "gram stem or .json path")->required();

    auto* plot = app.add_subcommand("plot", "regenerate summary tables from a records CSV");
    std::string p_records, p_out = "out";
    bool p_svg = false;
    plot->add_option("--records", p_records, "records.csv path")->required();
    plot->add_option("--out", p_out, "output directory");
    plot->add_flag("--svg", p_svg, "render SVG charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (sweep->parsed())
            return cmd_sweep(config_path, out_override, seed_override, dims_override,
                             families_override, nmax_override, sweep_svg);
        if (kernel->parsed()) {
            FeatureMapSpec fm;
            fm.family = feature_map_family_from_string(k_fm);
            fm.depth = k_depth;
            fm.entanglement = entanglement_from_string(k_ent);
            return cmd_kernel(k_dataset, k_name, k_d, k_family, k_out, fm, k_local, k_metric,
                              k_seed, k_nmax, k_block);
        }
        if (diagnose->parsed()) return cmd_diagnose(g_path);
        if (plot->parsed()) return cmd_plot(p_records, p_out, p_svg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace qkonc
