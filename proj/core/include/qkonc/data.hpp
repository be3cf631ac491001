#pragma once

// Dataset ingestion and preprocessing: CSV loading, standardization, PCA
// reduction, pairwise-product augmentation, synthetic generators and seeded
// deterministic splits.
//
// All randomness flows through SplitMix64 (splitmix64() below), a fixed
// published generator, so splits and synthetic data are reproducible across
// platforms and never depend on the standard library's RNG.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkonc/matrix.hpp"

namespace qkonc {

// SplitMix64 step: advances the state and returns the next 64-bit output.
// Constants from Steele, Lea & Flood's SplittableRandom.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic helpers built on splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64() { return splitmix64(state_); }
    double next_uniform();                      // [0, 1)
    double next_gaussian();                     // Box-Muller
    std::size_t next_index(std::size_t bound);  // [0, bound)

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates shuffle of 0..n-1 driven by splitmix64(seed).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct Dataset {
    std::string name;
    Matrix features;  // n x p
    LabelVector labels;
    std::vector<std::string> feature_names;

    std::size_t n() const { return features.rows; }
    std::size_t p() const { return features.cols; }
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
};

// Parses a comma-separated file with a header row; every column except the
// label column must be numeric. Labels map to contiguous class ids in
// first-appearance order; with positive_label set, that value maps to 1 and
// all others to 0.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& positive_label = std::nullopt);

enum class SyntheticKind { TWO_MOONS_LIKE, GAUSSIAN_BLOBS };

SyntheticKind synthetic_kind_from_string(const std::string& s);
std::string to_string(SyntheticKind k);

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::GAUSSIAN_BLOBS;
    int n = 100;
    double noise = 0.3;
    std::uint64_t seed = 0;
    // Blobs only: feature count, cluster count (labels alternate by cluster,
    // so an even cluster count keeps the classes balanced), center separation.
    int dim = 2;
    int clusters = 2;
    double separation = 4.0;
};

Dataset make_synthetic(SyntheticKind kind, int n, double noise, std::uint64_t seed);
Dataset make_synthetic(const SyntheticSpec& spec);

// Column-wise (x - mean) / std with the sample (n-1) standard deviation.
// Constant columns map to all-zero.
Matrix standardize(const Matrix& x);

// Projects the (centered) input onto the top target_d eigenvectors of the
// sample covariance, descending eigenvalue order. Sign convention: each
// component's largest-magnitude loading is positive.
Matrix pca_reduce(const Matrix& x, int target_d);

// Appends pairwise products x_a * x_b in lexicographic (a, b) order until the
// width reaches target_d, then re-standardizes all columns.
Matrix augment_pairwise(const Matrix& x, int target_d);

// Seeded shuffle, then contiguous slicing: train = floor(r0 n),
// val = floor(r1 n), test = remainder. Every slice must be nonempty.
SplitIndices make_splits(std::size_t n, std::uint64_t seed,
                         const std::array<double, 3>& ratios = {0.6, 0.2, 0.2});

// {seed, ratios, train[], val[], test[]} as JSON.
void save_splits(const std::string& path, const SplitIndices& splits);
SplitIndices load_splits(const std::string& path);

// FNV-1a 64 over raw little-endian float64 bytes; used to assert that kernel
// families consumed byte-identical preprocessed features.
std::string matrix_hash(const Matrix& x);
std::string file_hash(const std::string& path);

}  // namespace qkonc
