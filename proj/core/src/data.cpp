#include "qkonc/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qkonc/simcore.hpp"

namespace qkonc {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_uniform();
    const double u2 = next_uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::size_t Rng::next_index(std::size_t bound) {
    // Modulo mapping; the tiny bias is irrelevant here, determinism is not.
    return static_cast<std::size_t>(next_u64() % bound);
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_index(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
    const std::string cell = trim(raw);
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        std::ostringstream os;
        os << "load_csv: non-numeric cell at row " << row << ", column '" << column << "'";
        throw std::invalid_argument(os.str());
    }
    return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& positive_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("load_csv: empty file " + path);
    const std::vector<std::string> header = split_line(line);

    std::size_t label_idx = header.size();
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == label_column)
            label_idx = c;
        else
            feature_names.push_back(name);
    }
    if (label_idx == header.size())
        throw std::invalid_argument("load_csv: missing label column '" + label_column + "'");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::size_t row_number = 1;  // header was row 0
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            ++row_number;
            continue;
        }
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "load_csv: row " << row_number << " has " << cells.size()
               << " cells, expected " << header.size();
            throw std::invalid_argument(os.str());
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                raw_labels.push_back(trim(cells[c]));
            } else {
                row.push_back(parse_cell(cells[c], row_number, trim(header[c])));
            }
        }
        rows.push_back(std::move(row));
        ++row_number;
    }
    if (rows.empty()) throw std::invalid_argument("load_csv: no data rows in " + path);

    Dataset ds;
    ds.name = path;
    ds.feature_names = std::move(feature_names);
    ds.features = Matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) ds.features(i, j) = rows[i][j];

    ds.labels.resize(raw_labels.size());
    if (positive_label) {
        for (std::size_t i = 0; i < raw_labels.size(); ++i)
            ds.labels[i] = raw_labels[i] == *positive_label ? 1 : 0;
    } else {
        std::vector<std::string> order;  // first-appearance class ids
        for (std::size_t i = 0; i < raw_labels.size(); ++i) {
            auto it = std::find(order.begin(), order.end(), raw_labels[i]);
            if (it == order.end()) {
                order.push_back(raw_labels[i]);
                it = std::prev(order.end());
            }
            ds.labels[i] = static_cast<int>(it - order.begin());
        }
    }
    return ds;
}

SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "two_moons_like") return SyntheticKind::TWO_MOONS_LIKE;
    if (s == "gaussian_blobs") return SyntheticKind::GAUSSIAN_BLOBS;
    throw std::invalid_argument("unknown synthetic kind: " + s);
}

std::string to_string(SyntheticKind k) {
    return k == SyntheticKind::TWO_MOONS_LIKE ? "two_moons_like" : "gaussian_blobs";
}

Dataset make_synthetic(SyntheticKind kind, int n, double noise, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.noise = noise;
    spec.seed = seed;
    return make_synthetic(spec);
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 4) throw std::invalid_argument("make_synthetic: n must be >= 4");
    if (spec.noise < 0.0) throw std::invalid_argument("make_synthetic: negative noise");
    Rng rng(spec.seed);
    Dataset ds;
    ds.name = to_string(spec.kind);

    if (spec.kind == SyntheticKind::TWO_MOONS_LIKE) {
        if (spec.dim != 2)
            throw std::invalid_argument("make_synthetic: two_moons_like is 2-dimensional");
        const int n0 = (spec.n + 1) / 2;
        ds.features = Matrix(static_cast<std::size_t>(spec.n), 2);
        ds.labels.resize(static_cast<std::size_t>(spec.n));
        for (int i = 0; i < spec.n; ++i) {
            const bool upper = i < n0;
            const double t = rng.next_uniform() * std::numbers::pi;
            double x = upper ? std::cos(t) : 1.0 - std::cos(t);
            double y = upper ? std::sin(t) : 0.5 - std::sin(t);
            x += spec.noise * rng.next_gaussian();
            y += spec.noise * rng.next_gaussian();
            ds.features(static_cast<std::size_t>(i), 0) = x;
            ds.features(static_cast<std::size_t>(i), 1) = y;
            ds.labels[static_cast<std::size_t>(i)] = upper ? 0 : 1;
        }
    } else {
        if (spec.dim < 1) throw std::invalid_argument("make_synthetic: dim must be >= 1");
        if (spec.clusters < 2)
            throw std::invalid_argument("make_synthetic: need at least 2 clusters");
        const std::size_t dim = static_cast<std::size_t>(spec.dim);
        const std::size_t k = static_cast<std::size_t>(spec.clusters);
        // Clusters 0 and 1 sit at opposite corners so the two-cluster default is
        // always separable; further clusters get seeded random corner signs.
        Matrix centers(k, dim);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < dim; ++j) {
                double sign;
                if (c == 0)
                    sign = -1.0;
                else if (c == 1)
                    sign = 1.0;
                else
                    sign = (rng.next_u64() & 1u) ? 1.0 : -1.0;
                centers(c, j) = 0.5 * spec.separation * sign;
            }
        ds.features = Matrix(static_cast<std::size_t>(spec.n), dim);
        ds.labels.resize(static_cast<std::size_t>(spec.n));
        for (int i = 0; i < spec.n; ++i) {
            const std::size_t c = static_cast<std::size_t>(i) % k;  // round-robin: balanced
            for (std::size_t j = 0; j < dim; ++j)
                ds.features(static_cast<std::size_t>(i), j) =
                    centers(c, j) + spec.noise * rng.next_gaussian();
            ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(c % 2);
        }
    }

    ds.feature_names.resize(ds.p());
    for (std::size_t j = 0; j < ds.p(); ++j) ds.feature_names[j] = "f" + std::to_string(j);
    return ds;
}

Matrix standardize(const Matrix& x) {
    if (x.rows < 2) throw std::invalid_argument("standardize: need n >= 2");
    const std::size_t n = x.rows, p = x.cols;
    Matrix out(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = x(i, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        if (sd < 1e-12) continue;  // constant column -> zeros
        for (std::size_t i = 0; i < n; ++i) out(i, j) = (x(i, j) - mean) / sd;
    }
    return out;
}

Matrix pca_reduce(const Matrix& x, int target_d) {
    if (x.rows < 2) throw std::invalid_argument("pca_reduce: need n >= 2");
    if (target_d < 1) throw std::invalid_argument("pca_reduce: target_d must be >= 1");
    const std::size_t n = x.rows, p = x.cols;
    if (p < static_cast<std::size_t>(target_d))
        throw std::invalid_argument("pca_reduce: fewer features than target_d (augment instead)");

    Matrix centered(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered(i, j) = x(i, j) - mean;
    }
    Matrix cov(p, p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a; b < p; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += centered(i, a) * centered(i, b);
            acc /= static_cast<double>(n - 1);
            cov(a, b) = acc;
            cov(b, a) = acc;
        }

    const SymmetricEigenSystem es = symmetric_eig(cov);  // descending eigenvalues
    Matrix components(p, static_cast<std::size_t>(target_d));
    for (std::size_t c = 0; c < static_cast<std::size_t>(target_d); ++c) {
        // Sign convention: the largest-magnitude loading of each component is
        // positive (first occurrence wins on ties).
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t r = 0; r < p; ++r) {
            const double mag = std::abs(es.eigenvectors(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        const double flip = es.eigenvectors(arg, c) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < p; ++r) components(r, c) = flip * es.eigenvectors(r, c);
    }
    return matmul(centered, components);
}

Matrix augment_pairwise(const Matrix& x, int target_d) {
    const std::size_t p = x.cols;
    if (static_cast<std::size_t>(target_d) <= p)
        throw std::invalid_argument("augment_pairwise: target_d must exceed current width");
    const std::size_t max_width = p + p * (p - 1) / 2;
    if (static_cast<std::size_t>(target_d) > max_width) {
        std::ostringstream os;
        os << "augment_pairwise: cannot reach width " << target_d
           << "; max reachable is " << max_width;
        throw std::invalid_argument(os.str());
    }
    Matrix out(x.rows, static_cast<std::size_t>(target_d));
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < p; ++j) out(i, j) = x(i, j);
    std::size_t col = p;
    for (std::size_t a = 0; a < p && col < out.cols; ++a)
        for (std::size_t b = a + 1; b < p && col < out.cols; ++b) {
            for (std::size_t i = 0; i < x.rows; ++i) out(i, col) = x(i, a) * x(i, b);
            ++col;
        }
    return standardize(out);
}

SplitIndices make_splits(std::size_t n, std::uint64_t seed,
                         const std::array<double, 3>& ratios) {
    if (n < 3) throw std::invalid_argument("make_splits: need n >= 3");
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw std::invalid_argument("make_splits: negative ratio");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("make_splits: ratios must sum to 1");

    const std::vector<std::size_t> perm = seeded_permutation(n, seed);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(ratios[0] * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(ratios[1] * static_cast<double>(n)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument("make_splits: a split would be empty");

    SplitIndices s;
    s.seed = seed;
    s.ratios = ratios;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    return s;
}

void save_splits(const std::string& path, const SplitIndices& splits) {
    nlohmann::ordered_json j;
    j["seed"] = splits.seed;
    j["ratios"] = splits.ratios;
    j["train"] = splits.train;
    j["val"] = splits.val;
    j["test"] = splits.test;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_splits: cannot write " + path);
    out << j.dump(2) << "\n";
}

SplitIndices load_splits(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_splits: cannot open " + path);
    nlohmann::json j;
    in >> j;
    SplitIndices s;
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw std::runtime_error("load_splits: bad ratios in " + path);
    s.ratios = {r[0], r[1], r[2]};
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const unsigned char* bytes, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace

std::string matrix_hash(const Matrix& x) {
    std::uint64_t h = kFnvOffset;
    for (double v : x.data) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
        h = fnv1a(h, bytes, 8);
    }
    return to_hex(h);
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_hash: cannot open " + path);
    std::uint64_t h = kFnvOffset;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        h = fnv1a(h, reinterpret_cast<const unsigned char*>(buffer),
                  static_cast<std::size_t>(in.gcount()));
        if (!in) break;
    }
    return to_hex(h);
}

}  // namespace qkonc
