// Dense complex linear algebra for small quantum systems: density matrices,
// unitaries, Pauli-basis measurement, partial trace and the Choi representation
// of unitary channels.
//
// Qubit 0 is the most significant bit of a computational-basis index, so
// kron(A, B) acts with A on qubit 0.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qksa/rng.hpp"

namespace qksa {

using complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kInvariantTol = 1e-9;
inline constexpr double kExactTol = 1e-12;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t qubits_for_dim(std::size_t dim) {
    if (!is_power_of_two(dim)) throw std::invalid_argument("dimension is not a power of two");
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dim) ++n;
    return n;
}

inline ComplexMatrix identity(std::size_t dim) {
    return ComplexMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out = Eigen::kroneckerProduct(a, b);
    return out;
}

inline double max_abs_entry(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Returns a description of the first violated density-matrix invariant, if any.
inline std::optional<std::string> density_violation(const ComplexMatrix& m, double tol = kInvariantTol) {
    if (m.rows() != m.cols()) return "matrix is not square";
    if (!is_power_of_two(static_cast<std::size_t>(m.rows()))) return "dimension is not a power of two";
    if (max_abs_entry(m - m.adjoint()) > tol) return "matrix is not Hermitian";
    if (std::abs(m.trace() - complex{1.0, 0.0}) > tol) return "trace is not 1";
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -tol) return "matrix is not positive semidefinite";
    return std::nullopt;
}

/// A Hermitian, unit-trace, positive semidefinite matrix of power-of-two dimension.
///
/// Instances built through `from_matrix` are validated. Kernel routines whose
/// output is valid by construction use `trusted`.
class DensityMatrix {
public:
    static DensityMatrix from_matrix(ComplexMatrix m) {
        if (auto why = density_violation(m)) throw std::invalid_argument("not a density matrix: " + *why);
        return DensityMatrix(std::move(m));
    }

    static DensityMatrix trusted(ComplexMatrix m) { return DensityMatrix(std::move(m)); }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        if (!is_power_of_two(dim)) throw std::invalid_argument("dimension is not a power of two");
        return DensityMatrix(identity(dim) / static_cast<double>(dim));
    }

    static DensityMatrix pure(const ComplexVector& psi) {
        const double norm = psi.norm();
        if (norm < kExactTol) throw std::invalid_argument("zero state vector");
        const ComplexVector v = psi / norm;
        return from_matrix(v * v.adjoint());
    }

    // |index><index| in the computational basis.
    static DensityMatrix basis_state(std::size_t dim, std::size_t index) {
        ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return pure(v);
    }

    const ComplexMatrix& matrix() const { return mat_; }
    std::size_t dim() const { return static_cast<std::size_t>(mat_.rows()); }
    std::size_t qubits() const { return qubits_for_dim(dim()); }
    complex operator()(std::size_t i, std::size_t j) const {
        return mat_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    double purity() const { return (mat_ * mat_).trace().real(); }

    friend bool operator==(const DensityMatrix& a, const DensityMatrix& b) { return a.mat_ == b.mat_; }

private:
    explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {}
    ComplexMatrix mat_;
};

class Unitary {
public:
    static Unitary from_matrix(ComplexMatrix m) {
        if (m.rows() != m.cols() || !is_power_of_two(static_cast<std::size_t>(m.rows())))
            throw std::invalid_argument("unitary must be square with power-of-two dimension");
        if (max_abs_entry(m.adjoint() * m - identity(static_cast<std::size_t>(m.rows()))) > kInvariantTol)
            throw std::invalid_argument("matrix is not unitary");
        return Unitary(std::move(m));
    }

    static Unitary identity_of(std::size_t n_qubits) { return Unitary(identity(std::size_t{1} << n_qubits)); }

    const ComplexMatrix& matrix() const { return mat_; }
    std::size_t dim() const { return static_cast<std::size_t>(mat_.rows()); }
    std::size_t qubits() const { return qubits_for_dim(dim()); }

    friend bool operator==(const Unitary& a, const Unitary& b) { return a.mat_ == b.mat_; }

private:
    explicit Unitary(ComplexMatrix m) : mat_(std::move(m)) {}
    ComplexMatrix mat_;
};

enum class Axis : std::uint8_t { X = 1, Y = 2, Z = 3 };

inline char axis_char(Axis a) {
    switch (a) {
        case Axis::X: return 'X';
        case Axis::Y: return 'Y';
        case Axis::Z: return 'Z';
    }
    return '?';
}

/// Per-qubit Pauli measurement axes, qubit 0 first.
class BasisString {
public:
    BasisString() = default;
    explicit BasisString(std::vector<Axis> axes) : axes_(std::move(axes)) {}

    static BasisString parse(std::string_view text) {
        std::vector<Axis> axes;
        axes.reserve(text.size());
        for (char c : text) {
            switch (c) {
                case 'X': case 'x': axes.push_back(Axis::X); break;
                case 'Y': case 'y': axes.push_back(Axis::Y); break;
                case 'Z': case 'z': axes.push_back(Axis::Z); break;
                default: throw std::invalid_argument("invalid basis character '" + std::string(1, c) + "'");
            }
        }
        if (axes.empty()) throw std::invalid_argument("empty basis string");
        return BasisString(std::move(axes));
    }

    // Index in lexicographic order X < Y < Z with qubit 0 most significant.
    static BasisString from_index(std::size_t index, std::size_t n_qubits) {
        std::vector<Axis> axes(n_qubits);
        for (std::size_t k = n_qubits; k-- > 0;) {
            axes[k] = static_cast<Axis>(index % 3 + 1);
            index /= 3;
        }
        return BasisString(std::move(axes));
    }

    std::size_t index() const {
        std::size_t idx = 0;
        for (Axis a : axes_) idx = idx * 3 + (static_cast<std::size_t>(a) - 1);
        return idx;
    }

    std::size_t size() const { return axes_.size(); }
    Axis operator[](std::size_t k) const { return axes_[k]; }
    const std::vector<Axis>& axes() const { return axes_; }

    std::string to_string() const {
        std::string s;
        for (Axis a : axes_) s.push_back(axis_char(a));
        return s;
    }

    friend bool operator==(const BasisString&, const BasisString&) = default;

private:
    std::vector<Axis> axes_;
};

// Outcome bit strings: qubit 0 is the leftmost character and the most significant bit.
inline std::string outcome_bits(std::size_t outcome, std::size_t n_qubits) {
    std::string s(n_qubits, '0');
    for (std::size_t k = 0; k < n_qubits; ++k)
        if (outcome & (std::size_t{1} << (n_qubits - 1 - k))) s[k] = '1';
    return s;
}

inline std::size_t outcome_index(std::string_view bits) {
    std::size_t v = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw std::invalid_argument("invalid outcome bit string");
        v = (v << 1) | static_cast<std::size_t>(c == '1');
    }
    return v;
}

namespace gates {

inline ComplexMatrix pauli_x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline ComplexMatrix pauli_y() {
    ComplexMatrix m(2, 2);
    m << 0.0, complex(0.0, -1.0), complex(0.0, 1.0), 0.0;
    return m;
}

inline ComplexMatrix pauli_z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

inline ComplexMatrix hadamard() {
    const double r = 1.0 / std::sqrt(2.0);
    ComplexMatrix m(2, 2);
    m << r, r, r, -r;
    return m;
}

}  // namespace gates

// Columns are the +1 and -1 eigenvectors of the axis, so outcome bit 0 means +1.
inline ComplexMatrix axis_eigenbasis(Axis a) {
    const double r = 1.0 / std::sqrt(2.0);
    ComplexMatrix v(2, 2);
    switch (a) {
        case Axis::Z: v << 1.0, 0.0, 0.0, 1.0; break;
        case Axis::X: v << r, r, r, -r; break;
        case Axis::Y: v << r, r, complex(0.0, r), complex(0.0, -r); break;
    }
    return v;
}

inline ComplexMatrix basis_change(const BasisString& basis) {
    ComplexMatrix v = axis_eigenbasis(basis[0]);
    for (std::size_t k = 1; k < basis.size(); ++k) v = kron(v, axis_eigenbasis(basis[k]));
    return v;
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const Unitary& u) {
    if (rho.dim() != u.dim()) throw std::invalid_argument("apply_unitary: dimension mismatch");
    ComplexMatrix out = u.matrix() * rho.matrix() * u.matrix().adjoint();
    return DensityMatrix::trusted(0.5 * (out + out.adjoint()));
}

/// Outcome probabilities for measuring every qubit along its listed axis.
inline std::vector<double> born_probabilities(const DensityMatrix& rho, const BasisString& basis) {
    if (basis.size() != rho.qubits()) throw std::invalid_argument("born_probabilities: basis length mismatch");
    const ComplexMatrix v = basis_change(basis);
    const ComplexMatrix rotated = v.adjoint() * rho.matrix() * v;
    std::vector<double> p(rho.dim());
    double total = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
        p[m] = std::max(0.0, rotated(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)).real());
        total += p[m];
    }
    for (double& x : p) x /= total;
    return p;
}

/// Reduced state over the subsystem that is kept; `traced` is 1 or 2.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::pair<std::size_t, std::size_t> dims, int traced) {
    const auto [d1, d2] = dims;
    if (d1 * d2 != rho.dim()) throw std::invalid_argument("partial_trace: subsystem dims do not match");
    if (traced != 1 && traced != 2) throw std::invalid_argument("partial_trace: traced must be 1 or 2");
    const ComplexMatrix& m = rho.matrix();
    const std::size_t keep = traced == 1 ? d2 : d1;
    const std::size_t sum = traced == 1 ? d1 : d2;
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(keep));
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t j = 0; j < keep; ++j) {
            complex acc{0.0, 0.0};
            for (std::size_t k = 0; k < sum; ++k) {
                const auto r = traced == 1 ? k * d2 + i : i * d2 + k;
                const auto c = traced == 1 ? k * d2 + j : j * d2 + k;
                acc += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    return DensityMatrix::trusted(std::move(out));
}

/// Nearest-physical state by eigenvalue clipping. Total: an all-negative
/// spectrum maps to the maximally mixed state.
///
/// `macs`, when given, is incremented by the multiply-accumulates spent
/// rebuilding the matrix from its spectrum.
inline DensityMatrix project_to_physical(const ComplexMatrix& m, std::uint64_t* macs = nullptr) {
    if (m.rows() != m.cols() || !is_power_of_two(static_cast<std::size_t>(m.rows())))
        throw std::invalid_argument("project_to_physical: matrix must be square with power-of-two dimension");
    const auto dim = static_cast<std::size_t>(m.rows());
    const ComplexMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h);
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const double total = lambda.sum();
    if (total <= kExactTol) return DensityMatrix::maximally_mixed(dim);
    lambda /= total;
    const ComplexMatrix& vecs = eig.eigenvectors();
    ComplexMatrix out = vecs * lambda.cast<complex>().asDiagonal() * vecs.adjoint();
    if (macs) *macs += static_cast<std::uint64_t>(dim * dim * dim);
    return DensityMatrix::trusted(0.5 * (out + out.adjoint()));
}

/// Choi state of U: (1/d) sum_ij |i><j| (x) U|i><j|U^dag, the pure state of
/// (1/sqrt d) sum_i |i> (x) U|i>.
inline DensityMatrix choi_of_unitary(const Unitary& u) {
    const std::size_t d = u.dim();
    ComplexVector psi = ComplexVector::Zero(static_cast<Eigen::Index>(d * d));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k)
            psi(static_cast<Eigen::Index>(i * d + k)) = scale * u.matrix()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    ComplexMatrix out = psi * psi.adjoint();
    return DensityMatrix::trusted(0.5 * (out + out.adjoint()));
}

/// Channel output d * Tr_1[(rho_in^T (x) I) choi], projected to a valid state.
inline DensityMatrix choi_evolve(const DensityMatrix& choi, const DensityMatrix& rho_in) {
    const std::size_t d = rho_in.dim();
    if (choi.dim() != d * d) throw std::invalid_argument("choi_evolve: dimension mismatch");
    const ComplexMatrix& c = choi.matrix();
    const ComplexMatrix& r = rho_in.matrix();
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    // out(a,b) = d * sum_ij rho(i,j) * choi(i*d + a, j*d + b)
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const complex rij = r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (rij == complex{0.0, 0.0}) continue;
            out += rij * c.block(static_cast<Eigen::Index>(i * d), static_cast<Eigen::Index>(j * d),
                                 static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        }
    out *= static_cast<double>(d);
    return project_to_physical(out);
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// diagonal phases of R folded back into Q.
inline Unitary haar_random_unitary(std::size_t n_qubits, Rng& rng) {
    if (n_qubits == 0) throw std::invalid_argument("haar_random_unitary: need at least one qubit");
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
    ComplexMatrix z(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z(i, j) = complex(re, im);
        }
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d, d);
    const ComplexMatrix& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < d; ++j) {
        const complex rjj = r(j, j);
        const double mag = std::abs(rjj);
        q.col(j) *= mag > 0.0 ? rjj / mag : complex{1.0, 0.0};
    }
    return Unitary::from_matrix(std::move(q));
}

}  // namespace qksa
