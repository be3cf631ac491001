#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "qkonc/data.hpp"
#include "qkonc/featuremaps.hpp"

using namespace qkonc;

namespace {

double amp_diff(const Statevector& s, const std::vector<cxd>& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i)
        worst = std::max(worst, std::abs(s.amplitudes[i] - want[i]));
    return worst;
}

FeatureMapSpec spec_of(FeatureMapFamily family, int depth = 1,
                       Entanglement ent = Entanglement::LINEAR) {
    FeatureMapSpec s;
    s.family = family;
    s.depth = depth;
    s.entanglement = ent;
    return s;
}

}  // namespace

TEST_CASE("entangling pairs") {
    CHECK(entangling_pairs(Entanglement::LINEAR, 4) ==
          std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
    CHECK(entangling_pairs(Entanglement::RING, 3) ==
          std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}});
    CHECK_THROWS_AS(entangling_pairs(Entanglement::RING, 2), std::invalid_argument);
    CHECK_THROWS_AS(entangling_pairs(Entanglement::LINEAR, 1), std::invalid_argument);
}

TEST_CASE("zz_manual with zero angles is exactly |0...0>") {
    const Statevector s = encode(spec_of(FeatureMapFamily::ZZ_MANUAL), {0.0, 0.0, 0.0});
    CHECK(s.amplitudes[0] == cxd(1, 0));
    for (std::size_t i = 1; i < s.dim(); ++i) CHECK(s.amplitudes[i] == cxd(0, 0));
}

TEST_CASE("zz_manual single-qubit overlaps follow cos^2((a-b)/2)") {
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL);
    for (double a : {0.0, 0.4, 2.2}) {
        for (double b : {0.9, 1.7}) {
            const Statevector sa = encode(spec, {a});
            const Statevector sb = encode(spec, {b});
            const double k = std::norm(inner_product(sa, sb));
            const double c = std::cos((a - b) / 2.0);
            CHECK(k == doctest::Approx(c * c).epsilon(1e-12));
        }
    }
}

TEST_CASE("every family matches the dense unitary-product oracle") {
    Rng rng(7);
    for (const auto family : {FeatureMapFamily::ZZ_MANUAL, FeatureMapFamily::ZZ_MANUAL_CANONICAL,
                              FeatureMapFamily::ZZ_QISKIT}) {
        for (int depth : {1, 2}) {
            for (int d : {1, 3}) {
                FeatureVector x(static_cast<std::size_t>(d));
                for (auto& v : x) v = rng.next_gaussian();
                const auto spec = spec_of(family, depth);
                const Statevector got = encode(spec, x);
                const auto want = oracles::oracle_encode(spec, x);
                CHECK(amp_diff(got, want) < 1e-12);
            }
        }
    }
}

TEST_CASE("zz_qiskit d=2 example against the explicit gate product") {
    const auto spec = spec_of(FeatureMapFamily::ZZ_QISKIT);
    const FeatureVector x = {0.3, 0.7};
    const Statevector got = encode(spec, x);
    const auto want = oracles::oracle_encode(spec, x);
    CHECK(amp_diff(got, want) < 1e-13);
}

TEST_CASE("ring entanglement against the oracle") {
    Rng rng(13);
    FeatureVector x(4);
    for (auto& v : x) v = rng.next_gaussian();
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL, 1, Entanglement::RING);
    CHECK(amp_diff(encode(spec, x), oracles::oracle_encode(spec, x)) < 1e-12);
    CHECK_THROWS_AS(encode(spec, FeatureVector{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("encode rejects bad input") {
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL);
    CHECK_THROWS_AS(encode(spec, {}), std::invalid_argument);
    CHECK_THROWS_AS(encode(spec, {0.1, std::nan("")}), std::invalid_argument);
    auto bad = spec;
    bad.depth = 0;
    CHECK_THROWS_AS(encode(bad, {0.1}), std::invalid_argument);
}

TEST_CASE("encode is deterministic") {
    Rng rng(17);
    FeatureVector x(5);
    for (auto& v : x) v = rng.next_gaussian();
    const auto spec = spec_of(FeatureMapFamily::ZZ_QISKIT, 2);
    const Statevector a = encode(spec, x);
    const Statevector b = encode(spec, x);
    for (std::size_t i = 0; i < a.dim(); ++i) CHECK(a.amplitudes[i] == b.amplitudes[i]);
}

TEST_CASE("norm is 1 for every family up to d = 12") {
    Rng rng(19);
    for (const auto family : {FeatureMapFamily::ZZ_MANUAL, FeatureMapFamily::ZZ_MANUAL_CANONICAL,
                              FeatureMapFamily::ZZ_QISKIT}) {
        for (int d : {2, 7, 12}) {
            FeatureVector x(static_cast<std::size_t>(d));
            for (auto& v : x) v = rng.next_gaussian() * 2.0;
            const Statevector s = encode(spec_of(family), x);
            CHECK(s.norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("swapping the two features permutes the amplitudes") {
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL);
    const Statevector ab = encode(spec, {0.4, 1.3});
    const Statevector ba = encode(spec, {1.3, 0.4});
    // Relabeling qubits 0 <-> 1 swaps amplitude indices 1 and 2.
    CHECK(std::abs(ab.amplitudes[0] - ba.amplitudes[0]) < 1e-14);
    CHECK(std::abs(ab.amplitudes[3] - ba.amplitudes[3]) < 1e-14);
    CHECK(std::abs(ab.amplitudes[1] - ba.amplitudes[2]) < 1e-14);
    CHECK(std::abs(ab.amplitudes[2] - ba.amplitudes[1]) < 1e-14);
}

TEST_CASE("encode_patch equals the restricted circuit") {
    Rng rng(23);
    FeatureVector x(4);
    for (auto& v : x) v = rng.next_gaussian();
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL);

    // full patch degenerates to encode()
    const Statevector full = encode_patch(spec, x, {0, 1, 2, 3});
    const Statevector direct = encode(spec, x);
    for (std::size_t i = 0; i < full.dim(); ++i)
        CHECK(full.amplitudes[i] == direct.amplitudes[i]);

    // patch (2,3) equals the two-qubit circuit on (x2, x3)
    const Statevector patch = encode_patch(spec, x, {2, 3});
    const Statevector small = encode(spec, {x[2], x[3]});
    for (std::size_t i = 0; i < patch.dim(); ++i)
        CHECK(patch.amplitudes[i] == small.amplitudes[i]);

    CHECK_THROWS_AS(encode_patch(spec, x, {}), std::invalid_argument);
    CHECK_THROWS_AS(encode_patch(spec, x, {4}), std::out_of_range);
}

TEST_CASE("equal halves give identical patch states") {
    const auto spec = spec_of(FeatureMapFamily::ZZ_MANUAL);
    const FeatureVector x = {0.7, -0.2, 0.7, -0.2};
    const Statevector a = encode_patch(spec, x, {0, 1});
    const Statevector b = encode_patch(spec, x, {2, 3});
    for (std::size_t i = 0; i < a.dim(); ++i)
        CHECK(std::abs(a.amplitudes[i] - b.amplitudes[i]) < 1e-15);
}

TEST_CASE("ring spec degrades to the chain on 2-qubit patches") {
    const auto ring = spec_of(FeatureMapFamily::ZZ_MANUAL, 1, Entanglement::RING);
    const auto linear = spec_of(FeatureMapFamily::ZZ_MANUAL, 1, Entanglement::LINEAR);
    const FeatureVector x = {0.3, 1.1, -0.4, 0.9};
    const Statevector a = encode_patch(ring, x, {0, 1});
    const Statevector b = encode_patch(linear, x, {0, 1});
    for (std::size_t i = 0; i < a.dim(); ++i) CHECK(a.amplitudes[i] == b.amplitudes[i]);
}

TEST_CASE("string round trips") {
    CHECK(feature_map_family_from_string(to_string(FeatureMapFamily::ZZ_QISKIT)) ==
          FeatureMapFamily::ZZ_QISKIT);
    CHECK(entanglement_from_string(to_string(Entanglement::RING)) == Entanglement::RING);
    CHECK_THROWS_AS(feature_map_family_from_string("nope"), std::invalid_argument);
}
