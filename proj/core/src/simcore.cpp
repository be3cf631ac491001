#include "qkonc/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qkonc {

namespace {

constexpr double kUnitaryTol = 1e-10;
constexpr double kHermitianTol = 1e-8;
constexpr double kJacobiOffdiagTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;
// Eigenvalues below this are treated as exact zeros when taking matrix roots;
// partial traces leave noise of roughly this size.
constexpr double kSqrtClampTol = 1e-12;

void check_qubit(int qubit, int d, const char* who) {
    if (qubit < 0 || qubit >= d) {
        std::ostringstream os;
        os << who << ": qubit index " << qubit << " out of range for d=" << d;
        throw std::out_of_range(os.str());
    }
}

double max_abs(const ComplexMatrix& m) {
    double v = 0.0;
    for (const auto& z : m.data) v = std::max(v, std::abs(z));
    return v;
}

void check_hermitian(const ComplexMatrix& m, const char* who) {
    if (m.rows != m.cols) throw std::invalid_argument(std::string(who) + ": matrix not square");
    const double tol = kHermitianTol * std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i; j < m.cols; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol)
                throw std::invalid_argument(std::string(who) + ": matrix not Hermitian");
}

double offdiag_frobenius(const ComplexMatrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            if (i != j) acc += std::norm(m(i, j));
    return std::sqrt(acc);
}

double offdiag_frobenius(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            if (i != j) acc += m(i, j) * m(i, j);
    return std::sqrt(acc);
}

double frobenius(const ComplexMatrix& m) {
    double acc = 0.0;
    for (const auto& z : m.data) acc += std::norm(z);
    return std::sqrt(acc);
}

double frobenius(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return std::sqrt(acc);
}

// Sorts eigenvalues descending and permutes eigenvector columns to match.
template <typename MatrixT>
void sort_eigensystem(std::vector<double>& vals, MatrixT& vecs) {
    const std::size_t n = vals.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    std::vector<double> sv(n);
    MatrixT svecs(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        sv[k] = vals[order[k]];
        for (std::size_t r = 0; r < n; ++r) svecs(r, k) = vecs(r, order[k]);
    }
    vals = std::move(sv);
    vecs = std::move(svecs);
}

// tan(theta) of the Jacobi rotation annihilating an off-diagonal element,
// from tau = (a_qq - a_pp) / (2 |a_pq|); smaller-magnitude root for stability.
double jacobi_tangent(double tau) {
    const double root = std::sqrt(tau * tau + 1.0);
    return (tau >= 0.0) ? -1.0 / (tau + root) : 1.0 / (-tau + root);
}

}  // namespace

Statevector::Statevector(int d) : num_qubits(d) {
    if (d < 1) throw std::invalid_argument("Statevector: num_qubits must be >= 1");
    if (d > 24) throw std::invalid_argument("Statevector: num_qubits > 24 unsupported");
    amplitudes.assign(std::size_t(1) << d, cxd(0.0, 0.0));
    amplitudes[0] = cxd(1.0, 0.0);
}

double Statevector::norm_sq() const {
    double acc = 0.0;
    for (const auto& a : amplitudes) acc += std::norm(a);
    return acc;
}

Gate1q gate_hadamard() {
    const double h = 1.0 / std::sqrt(2.0);
    return {cxd(h, 0), cxd(h, 0), cxd(h, 0), cxd(-h, 0)};
}

Gate1q gate_identity() {
    return {cxd(1, 0), cxd(0, 0), cxd(0, 0), cxd(1, 0)};
}

Gate1q gate_rx(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return {cxd(c, 0), cxd(0, -s), cxd(0, -s), cxd(c, 0)};
}

Gate1q gate_rz(double theta) {
    return {std::polar(1.0, -theta / 2.0), cxd(0, 0), cxd(0, 0), std::polar(1.0, theta / 2.0)};
}

Gate1q gate_phase(double theta) {
    return {cxd(1, 0), cxd(0, 0), cxd(0, 0), std::polar(1.0, theta)};
}

Statevector apply_1q_gate(const Statevector& state, int qubit, const Gate1q& gate,
                          bool check_unitary) {
    check_qubit(qubit, state.num_qubits, "apply_1q_gate");
    if (check_unitary) {
        // U U^dagger == I within tolerance.
        const cxd r00 = gate[0] * std::conj(gate[0]) + gate[1] * std::conj(gate[1]);
        const cxd r01 = gate[0] * std::conj(gate[2]) + gate[1] * std::conj(gate[3]);
        const cxd r11 = gate[2] * std::conj(gate[2]) + gate[3] * std::conj(gate[3]);
        if (std::abs(r00 - cxd(1, 0)) > kUnitaryTol || std::abs(r11 - cxd(1, 0)) > kUnitaryTol ||
            std::abs(r01) > kUnitaryTol)
            throw std::invalid_argument("apply_1q_gate: gate is not unitary");
    }
    Statevector out = state;
    const std::size_t stride = std::size_t(1) << qubit;
    const std::size_t dim = out.dim();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t off = 0; off < stride; ++off) {
            const std::size_t i0 = base + off;
            const std::size_t i1 = i0 + stride;
            const cxd a0 = out.amplitudes[i0];
            const cxd a1 = out.amplitudes[i1];
            out.amplitudes[i0] = gate[0] * a0 + gate[1] * a1;
            out.amplitudes[i1] = gate[2] * a0 + gate[3] * a1;
        }
    }
    return out;
}

Statevector apply_2q_phase_gate(const Statevector& state, int q1, int q2, TwoQubitKind kind,
                                double theta) {
    check_qubit(q1, state.num_qubits, "apply_2q_phase_gate");
    check_qubit(q2, state.num_qubits, "apply_2q_phase_gate");
    if (q1 == q2) throw std::invalid_argument("apply_2q_phase_gate: equal qubit indices");

    Statevector out = state;
    const std::size_t m1 = std::size_t(1) << q1;
    const std::size_t m2 = std::size_t(1) << q2;
    const std::size_t dim = out.dim();
    switch (kind) {
        case TwoQubitKind::CZ:
            for (std::size_t i = 0; i < dim; ++i)
                if ((i & m1) && (i & m2)) out.amplitudes[i] = -out.amplitudes[i];
            break;
        case TwoQubitKind::CX:
            for (std::size_t i = 0; i < dim; ++i)
                if ((i & m1) && !(i & m2)) std::swap(out.amplitudes[i], out.amplitudes[i | m2]);
            break;
        case TwoQubitKind::RZZ: {
            const cxd same = std::polar(1.0, -theta / 2.0);
            const cxd diff = std::polar(1.0, theta / 2.0);
            for (std::size_t i = 0; i < dim; ++i) {
                const bool b1 = (i & m1) != 0;
                const bool b2 = (i & m2) != 0;
                out.amplitudes[i] *= (b1 == b2) ? same : diff;
            }
            break;
        }
    }
    return out;
}

cxd inner_product(const Statevector& a, const Statevector& b) {
    if (a.num_qubits != b.num_qubits)
        throw std::invalid_argument("inner_product: dimension mismatch");
    cxd acc(0.0, 0.0);
    const std::size_t dim = a.dim();
    for (std::size_t k = 0; k < dim; ++k) acc += std::conj(a.amplitudes[k]) * b.amplitudes[k];
    return acc;
}

DensityMatrix partial_trace(const Statevector& state, const std::vector<int>& keep) {
    const int d = state.num_qubits;
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (int q : keep) {
        check_qubit(q, d, "partial_trace");
        if (seen[static_cast<std::size_t>(q)])
            throw std::invalid_argument("partial_trace: duplicate index in keep set");
        seen[static_cast<std::size_t>(q)] = true;
    }
    std::vector<int> comp;
    for (int q = 0; q < d; ++q)
        if (!seen[static_cast<std::size_t>(q)]) comp.push_back(q);

    const int k = static_cast<int>(keep.size());
    const std::size_t kdim = std::size_t(1) << k;
    const std::size_t edim = std::size_t(1) << comp.size();

    // Bit placement: bit t of the reduced index lives at full-index bit keep[t].
    std::vector<std::size_t> keep_base(kdim, 0);
    for (std::size_t r = 0; r < kdim; ++r)
        for (int t = 0; t < k; ++t)
            if (r & (std::size_t(1) << t)) keep_base[r] |= std::size_t(1) << keep[t];

    std::vector<std::size_t> env_base(edim, 0);
    for (std::size_t e = 0; e < edim; ++e)
        for (std::size_t u = 0; u < comp.size(); ++u)
            if (e & (std::size_t(1) << u)) env_base[e] |= std::size_t(1) << comp[u];

    DensityMatrix rho;
    rho.num_qubits = k;
    rho.entries = ComplexMatrix(kdim, kdim);
    std::vector<cxd> slice(kdim);
    for (std::size_t e = 0; e < edim; ++e) {
        for (std::size_t r = 0; r < kdim; ++r) slice[r] = state.amplitudes[keep_base[r] | env_base[e]];
        for (std::size_t r = 0; r < kdim; ++r) {
            const cxd vr = slice[r];
            for (std::size_t c = 0; c < kdim; ++c)
                rho.entries(r, c) += vr * std::conj(slice[c]);
        }
    }
    return rho;
}

HermitianEigenSystem hermitian_eig(const ComplexMatrix& m) {
    check_hermitian(m, "hermitian_eig");
    const std::size_t n = m.rows;

    // Work on the exactly-Hermitian average so sub-tolerance drift cannot bias
    // the rotations.
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));

    ComplexMatrix v = ComplexMatrix::identity(n);
    const double scale = std::max(1.0, frobenius(a));
    const double stop = kJacobiOffdiagTol * scale;

    int sweeps = 0;
    double off = offdiag_frobenius(a);
    while (off > stop && sweeps < kJacobiMaxSweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cxd beta = a(p, q);
                const double b = std::abs(beta);
                if (b <= stop / (double(n) * double(n) + 1.0)) continue;
                const cxd eiphi = beta / b;
                const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * b);
                const double t = jacobi_tangent(tau);
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cxd se_m = s * std::conj(eiphi);
                const cxd se_p = s * eiphi;
                // A <- A U (columns p, q)
                for (std::size_t r = 0; r < n; ++r) {
                    const cxd akp = a(r, p), akq = a(r, q);
                    a(r, p) = c * akp + se_m * akq;
                    a(r, q) = -se_p * akp + c * akq;
                }
                // A <- U^dagger A (rows p, q)
                for (std::size_t r = 0; r < n; ++r) {
                    const cxd apk = a(p, r), aqk = a(q, r);
                    a(p, r) = c * apk + se_p * aqk;
                    a(q, r) = -se_m * apk + c * aqk;
                }
                // V <- V U
                for (std::size_t r = 0; r < n; ++r) {
                    const cxd vkp = v(r, p), vkq = v(r, q);
                    v(r, p) = c * vkp + se_m * vkq;
                    v(r, q) = -se_p * vkp + c * vkq;
                }
            }
        }
        ++sweeps;
        off = offdiag_frobenius(a);
    }
    if (off > stop) {
        std::ostringstream os;
        os << "hermitian_eig: no convergence after " << sweeps
           << " sweeps, off-diagonal residual " << off;
        throw std::runtime_error(os.str());
    }

    HermitianEigenSystem es;
    es.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.eigenvalues[i] = a(i, i).real();
    es.eigenvectors = std::move(v);
    es.sweeps = sweeps;
    es.offdiag_residual = off;
    sort_eigensystem(es.eigenvalues, es.eigenvectors);
    return es;
}

SymmetricEigenSystem symmetric_eig(const Matrix& m) {
    if (!m.square()) throw std::invalid_argument("symmetric_eig: matrix not square");
    const std::size_t n = m.rows;
    double amax = 0.0;
    for (double x : m.data) amax = std::max(amax, std::abs(x));
    const double sym_tol = kHermitianTol * std::max(1.0, amax);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > sym_tol)
                throw std::invalid_argument("symmetric_eig: matrix not symmetric");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, frobenius(a));
    const double stop = kJacobiOffdiagTol * scale;

    int sweeps = 0;
    double off = offdiag_frobenius(a);
    while (off > stop && sweeps < kJacobiMaxSweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double beta = a(p, q);
                const double b = std::abs(beta);
                if (b <= stop / (double(n) * double(n) + 1.0)) continue;
                const double sgn = beta >= 0.0 ? 1.0 : -1.0;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * b);
                const double t = jacobi_tangent(tau);
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c * sgn;
                for (std::size_t r = 0; r < n; ++r) {
                    const double akp = a(r, p), akq = a(r, q);
                    a(r, p) = c * akp + s * akq;
                    a(r, q) = -s * akp + c * akq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apk = a(p, r), aqk = a(q, r);
                    a(p, r) = c * apk + s * aqk;
                    a(q, r) = -s * apk + c * aqk;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vkp = v(r, p), vkq = v(r, q);
                    v(r, p) = c * vkp + s * vkq;
                    v(r, q) = -s * vkp + c * vkq;
                }
            }
        }
        ++sweeps;
        off = offdiag_frobenius(a);
    }
    if (off > stop) {
        std::ostringstream os;
        os << "symmetric_eig: no convergence after " << sweeps
           << " sweeps, off-diagonal residual " << off;
        throw std::runtime_error(os.str());
    }

    SymmetricEigenSystem es;
    es.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.eigenvalues[i] = a(i, i);
    es.eigenvectors = std::move(v);
    es.sweeps = sweeps;
    es.offdiag_residual = off;
    sort_eigensystem(es.eigenvalues, es.eigenvectors);
    return es;
}

namespace {

// V diag(f(lambda)) V^dagger for an eigensystem of a Hermitian matrix.
ComplexMatrix rebuild(const HermitianEigenSystem& es, const std::vector<double>& diag) {
    const std::size_t n = es.eigenvalues.size();
    ComplexMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (diag[k] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const cxd vik = es.eigenvectors(i, k) * diag[k];
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += vik * std::conj(es.eigenvectors(j, k));
        }
    }
    return out;
}

ComplexMatrix cmatmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const cxd aik = a(i, k);
            if (aik == cxd(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

void check_density(const HermitianEigenSystem& es, const char* who) {
    for (double lam : es.eigenvalues)
        if (lam < -kHermitianTol)
            throw std::invalid_argument(std::string(who) +
                                        ": invalid density matrix (negative eigenvalue)");
}

}  // namespace

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim())
        throw std::invalid_argument("uhlmann_fidelity: dimension mismatch");
    const auto es_rho = hermitian_eig(rho.entries);
    check_density(es_rho, "uhlmann_fidelity");
    const auto es_sigma = hermitian_eig(sigma.entries);
    check_density(es_sigma, "uhlmann_fidelity");

    std::vector<double> root(es_rho.eigenvalues.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        const double lam = es_rho.eigenvalues[i];
        root[i] = lam > kSqrtClampTol ? std::sqrt(lam) : 0.0;
    }
    const ComplexMatrix sqrt_rho = rebuild(es_rho, root);
    const ComplexMatrix inner = cmatmul(cmatmul(sqrt_rho, sigma.entries), sqrt_rho);

    const auto es_inner = hermitian_eig(inner);
    double acc = 0.0;
    for (double mu : es_inner.eigenvalues)
        if (mu > kSqrtClampTol) acc += std::sqrt(mu);
    const double f = acc * acc;
    return std::min(1.0, std::max(0.0, f));
}

double hs_inner(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) throw std::invalid_argument("hs_inner: dimension mismatch");
    const std::size_t n = rho.dim();
    cxd acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) acc += rho.entries(i, j) * sigma.entries(j, i);
    return acc.real();
}

}  // namespace qkonc
