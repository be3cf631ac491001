#include "qkonc/featuremaps.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qkonc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_features(const FeatureVector& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i])) {
            std::ostringstream os;
            os << "encode: non-finite feature at index " << i;
            throw std::invalid_argument(os.str());
        }
}

// Core circuit builder for a d-qubit feature subvector.
Statevector build(const FeatureMapSpec& spec, const FeatureVector& x) {
    const int d = static_cast<int>(x.size());
    if (d < 1) throw std::invalid_argument("encode: empty feature vector");
    if (spec.depth < 1) throw std::invalid_argument("encode: depth must be >= 1");
    check_features(x);

    Entanglement pattern = spec.entanglement;
    // A ring needs at least 3 sites; smaller circuits fall back to the chain,
    // which is the same pair set minus the duplicate wrap-around edge.
    if (pattern == Entanglement::RING && d < 3) pattern = Entanglement::LINEAR;

    std::vector<std::pair<int, int>> pairs;
    if (d >= 2) pairs = entangling_pairs(pattern, d);

    Statevector state(d);
    for (int layer = 0; layer < spec.depth; ++layer) {
        switch (spec.family) {
            case FeatureMapFamily::ZZ_MANUAL:
                for (int q = 0; q < d; ++q) state = apply_1q_gate(state, q, gate_rx(x[q]));
                for (const auto& [i, j] : pairs)
                    state = apply_2q_phase_gate(state, i, j, TwoQubitKind::CZ);
                break;
            case FeatureMapFamily::ZZ_MANUAL_CANONICAL:
                if (layer == 0)
                    for (int q = 0; q < d; ++q) state = apply_1q_gate(state, q, gate_hadamard());
                for (int q = 0; q < d; ++q) state = apply_1q_gate(state, q, gate_rz(2.0 * x[q]));
                for (const auto& [i, j] : pairs)
                    state = apply_2q_phase_gate(state, i, j, TwoQubitKind::RZZ,
                                                2.0 * (kPi - x[i]) * (kPi - x[j]));
                break;
            case FeatureMapFamily::ZZ_QISKIT:
                for (int q = 0; q < d; ++q) state = apply_1q_gate(state, q, gate_hadamard());
                for (int q = 0; q < d; ++q)
                    state = apply_1q_gate(state, q, gate_phase(2.0 * x[q]));
                for (const auto& [i, j] : pairs) {
                    state = apply_2q_phase_gate(state, i, j, TwoQubitKind::CX);
                    state = apply_1q_gate(state, j,
                                          gate_phase(2.0 * (kPi - x[i]) * (kPi - x[j])));
                    state = apply_2q_phase_gate(state, i, j, TwoQubitKind::CX);
                }
                break;
        }
    }
    return state;
}

}  // namespace

std::string to_string(FeatureMapFamily f) {
    switch (f) {
        case FeatureMapFamily::ZZ_MANUAL: return "zz_manual";
        case FeatureMapFamily::ZZ_MANUAL_CANONICAL: return "zz_manual_canonical";
        case FeatureMapFamily::ZZ_QISKIT: return "zz_qiskit";
    }
    return "?";
}

std::string to_string(Entanglement e) {
    return e == Entanglement::LINEAR ? "linear" : "ring";
}

FeatureMapFamily feature_map_family_from_string(const std::string& s) {
    if (s == "zz_manual") return FeatureMapFamily::ZZ_MANUAL;
    if (s == "zz_manual_canonical") return FeatureMapFamily::ZZ_MANUAL_CANONICAL;
    if (s == "zz_qiskit") return FeatureMapFamily::ZZ_QISKIT;
    throw std::invalid_argument("unknown feature map family: " + s);
}

Entanglement entanglement_from_string(const std::string& s) {
    if (s == "linear") return Entanglement::LINEAR;
    if (s == "ring") return Entanglement::RING;
    throw std::invalid_argument("unknown entanglement pattern: " + s);
}

std::vector<std::pair<int, int>> entangling_pairs(Entanglement pattern, int d) {
    if (pattern == Entanglement::LINEAR && d < 2)
        throw std::invalid_argument("entangling_pairs: linear pattern needs d >= 2");
    if (pattern == Entanglement::RING && d < 3)
        throw std::invalid_argument("entangling_pairs: ring pattern needs d >= 3");
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i + 1 < d; ++i) pairs.emplace_back(i, i + 1);
    if (pattern == Entanglement::RING) pairs.emplace_back(d - 1, 0);
    return pairs;
}

Statevector encode(const FeatureMapSpec& spec, const FeatureVector& x) {
    if (spec.entanglement == Entanglement::RING && x.size() < 3 && x.size() != 1)
        throw std::invalid_argument("encode: ring entanglement needs d >= 3");
    return build(spec, x);
}

Statevector encode_patch(const FeatureMapSpec& spec, const FeatureVector& x,
                         const std::vector<int>& patch) {
    if (patch.empty()) throw std::invalid_argument("encode_patch: empty patch");
    FeatureVector sub;
    sub.reserve(patch.size());
    for (int q : patch) {
        if (q < 0 || q >= static_cast<int>(x.size()))
            throw std::out_of_range("encode_patch: patch index out of range");
        sub.push_back(x[static_cast<std::size_t>(q)]);
    }
    return build(spec, sub);
}

}  // namespace qkonc
