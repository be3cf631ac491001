#pragma once

// Exact complex linear algebra for d-qubit pure states: gate application,
// overlaps, partial traces, Hermitian eigendecomposition and mixed-state
// similarity measures.
//
// Qubit ordering convention, used everywhere in this library:
//   qubit 0 is the LEAST significant bit of the amplitude index
//   (little-endian). So for d=2 the amplitude at index 2 = 0b10 is the
//   basis state with qubit 1 set and qubit 0 clear.
//
// All functions are pure: inputs are never mutated and results carry no
// hidden state, so values can be shared freely across threads.

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "qkonc/matrix.hpp"

namespace qkonc {

using cxd = std::complex<double>;

// Dense row-major complex matrix (density matrices, eigenvector bases).
struct ComplexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<cxd> data;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c, cxd fill = cxd(0.0, 0.0))
        : rows(r), cols(c), data(r * c, fill) {}

    cxd& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    cxd operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = cxd(1.0, 0.0);
        return m;
    }
};

// Pure state of `num_qubits` qubits; amplitudes.size() == 2^num_qubits.
struct Statevector {
    int num_qubits = 0;
    std::vector<cxd> amplitudes;

    Statevector() = default;
    explicit Statevector(int d);  // |0...0>

    std::size_t dim() const { return amplitudes.size(); }
    double norm_sq() const;
};

// Mixed state on `num_qubits` qubits; entries is 2^k x 2^k, Hermitian,
// unit trace up to numerical noise from the producing partial trace.
struct DensityMatrix {
    int num_qubits = 0;
    ComplexMatrix entries;

    std::size_t dim() const { return entries.rows; }
};

// Eigenvalues sorted descending; eigenvector column i pairs with eigenvalue i.
struct HermitianEigenSystem {
    std::vector<double> eigenvalues;
    ComplexMatrix eigenvectors;
    int sweeps = 0;
    double offdiag_residual = 0.0;
};

// Real symmetric counterpart, shared by kernels / diagnostics / data.
struct SymmetricEigenSystem {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
    int sweeps = 0;
    double offdiag_residual = 0.0;
};

using Gate1q = std::array<cxd, 4>;  // row-major 2x2

// Common single-qubit gates.
Gate1q gate_hadamard();
Gate1q gate_identity();
Gate1q gate_rx(double theta);
Gate1q gate_rz(double theta);
Gate1q gate_phase(double theta);  // diag(1, e^{i theta})

enum class TwoQubitKind { CZ, CX, RZZ };

// Applies `gate` to the given qubit. When check_unitary is set (debug aid)
// the 2x2 matrix is verified to be unitary within 1e-10 first.
Statevector apply_1q_gate(const Statevector& state, int qubit, const Gate1q& gate,
                          bool check_unitary = false);

// CZ: flips the sign of amplitudes with both bits set.
// CX: flips bit q2 where bit q1 is set.
// RZZ(theta): multiplies each amplitude by exp(-i theta/2 * (-1)^(b1 XOR b2)).
Statevector apply_2q_phase_gate(const Statevector& state, int q1, int q2,
                                TwoQubitKind kind, double theta = 0.0);

// <a|b> = sum_k conj(a_k) b_k.
cxd inner_product(const Statevector& a, const Statevector& b);

// Reduced density matrix on the kept qubits. keep[t] becomes bit t of the
// reduced index, so the output ordering follows `keep`.
DensityMatrix partial_trace(const Statevector& state, const std::vector<int>& keep);

// Cyclic Jacobi eigensolver for complex Hermitian matrices. Iterates until the
// off-diagonal Frobenius mass drops below 1e-12 (relative to max(1, ||m||_F))
// or 100 sweeps; throws on non-convergence, reporting the achieved residual.
HermitianEigenSystem hermitian_eig(const ComplexMatrix& m);

// Same algorithm on real symmetric input.
SymmetricEigenSystem symmetric_eig(const Matrix& m);

// Uhlmann fidelity, returned squared: (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
// With this convention F(|a><a|, |b><b|) = |<a|b>|^2, so full-system patch
// kernels degenerate to the plain fidelity kernel.
double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// Hilbert-Schmidt inner product Tr(rho sigma); real for Hermitian inputs.
double hs_inner(const DensityMatrix& rho, const DensityMatrix& sigma);

}  // namespace qkonc
