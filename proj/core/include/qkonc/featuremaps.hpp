#pragma once

// ZZ-style data-encoding circuits. A FeatureMapSpec picks one of three
// families, a repetition depth L and an entanglement pattern; encode()
// prepares |psi(x)> for a feature vector x whose length sets the qubit count.

#include <string>
#include <utility>
#include <vector>

#include "qkonc/simcore.hpp"

namespace qkonc {

enum class FeatureMapFamily { ZZ_MANUAL, ZZ_MANUAL_CANONICAL, ZZ_QISKIT };
enum class Entanglement { LINEAR, RING };

struct FeatureMapSpec {
    FeatureMapFamily family = FeatureMapFamily::ZZ_MANUAL;
    int depth = 1;  // L >= 1
    Entanglement entanglement = Entanglement::LINEAR;
};

// Feature vector; entries are rotation angles (radians) after preprocessing.
using FeatureVector = std::vector<double>;

std::string to_string(FeatureMapFamily f);
std::string to_string(Entanglement e);
FeatureMapFamily feature_map_family_from_string(const std::string& s);
Entanglement entanglement_from_string(const std::string& s);

// LINEAR: (0,1),(1,2),...,(d-2,d-1). RING: the linear list plus (d-1,0).
// A ring of 2 would duplicate the linear pair and is rejected (d >= 3).
std::vector<std::pair<int, int>> entangling_pairs(Entanglement pattern, int d);

// Builds |psi(x)> on d = x.size() qubits. Layer structure per family:
//   ZZ_MANUAL:            Rx(x_i) on all qubits, then CZ on each pair.
//   ZZ_MANUAL_CANONICAL:  H on all qubits (first layer only), then Rz(2 x_i),
//                         then RZZ(2 (pi-x_i)(pi-x_j)) on each pair.
//   ZZ_QISKIT:            H on all qubits, then P(2 x_i), then per pair (i,j)
//                         CX(i,j), P(2 (pi-x_i)(pi-x_j)) on j, CX(i,j).
// Entanglers are skipped when d == 1.
Statevector encode(const FeatureMapSpec& spec, const FeatureVector& x);

// Encodes the |patch|-qubit circuit on the subvector x[patch]. Entangling
// pairs are recomputed for the patch-sized circuit; RING degrades to LINEAR
// for patches of fewer than 3 qubits.
Statevector encode_patch(const FeatureMapSpec& spec, const FeatureVector& x,
                         const std::vector<int>& patch);

}  // namespace qkonc
