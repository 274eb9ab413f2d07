#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qksa/qcore.hpp"

namespace qksa {

enum class DistanceId { trace, hilbert_schmidt, bures, hamming, kl };

inline std::string_view to_string(DistanceId id) {
    switch (id) {
        case DistanceId::trace: return "trace";
        case DistanceId::hilbert_schmidt: return "hilbert_schmidt";
        case DistanceId::bures: return "bures";
        case DistanceId::hamming: return "hamming";
        case DistanceId::kl: return "kl";
    }
    return "?";
}

inline DistanceId parse_distance(std::string_view token) {
    for (auto id : {DistanceId::trace, DistanceId::hilbert_schmidt, DistanceId::bures, DistanceId::hamming, DistanceId::kl})
        if (to_string(id) == token) return id;
    throw std::invalid_argument("unknown distance '" + std::string(token) + "'");
}

namespace detail {

inline void require_same_dim(const DensityMatrix& a, const DensityMatrix& b, const char* what) {
    if (a.dim() != b.dim()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// PSD square root; eigenvalues below -kInvariantTol are a domain error.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -kInvariantTol) throw std::domain_error("matrix square root of a non-PSD matrix");
    const Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.cast<complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

inline double round_to(double x, int places) {
    const double scale = std::pow(10.0, places);
    return std::round(x * scale) / scale;
}

}  // namespace detail

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    detail::require_same_dim(a, b, "trace_distance");
    const ComplexMatrix diff = a.matrix() - b.matrix();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
    return std::clamp(0.5 * eig.eigenvalues().cwiseAbs().sum(), 0.0, 1.0);
}

// Frobenius norm of the difference.
inline double hilbert_schmidt(const DensityMatrix& a, const DensityMatrix& b) {
    detail::require_same_dim(a, b, "hilbert_schmidt");
    return (a.matrix() - b.matrix()).norm();
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2, clamped to [0, 1].
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    detail::require_same_dim(a, b, "fidelity");
    const ComplexMatrix sa = detail::psd_sqrt(a.matrix());
    detail::psd_sqrt(b.matrix());  // domain check on b
    const ComplexMatrix inner = sa * b.matrix() * sa;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
    const double root_trace = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(root_trace * root_trace, 0.0, 1.0);
}

inline double bures(const DensityMatrix& a, const DensityMatrix& b) {
    const double f = fidelity(a, b);
    return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::sqrt(f))));
}

/// Fraction of cells whose real or imaginary part differs after rounding to `places` decimals.
inline double hamming(const DensityMatrix& a, const DensityMatrix& b, int places) {
    detail::require_same_dim(a, b, "hamming");
    const auto& ma = a.matrix();
    const auto& mb = b.matrix();
    std::size_t differing = 0;
    for (Eigen::Index i = 0; i < ma.rows(); ++i)
        for (Eigen::Index j = 0; j < ma.cols(); ++j) {
            const bool re = detail::round_to(ma(i, j).real(), places) != detail::round_to(mb(i, j).real(), places);
            const bool im = detail::round_to(ma(i, j).imag(), places) != detail::round_to(mb(i, j).imag(), places);
            differing += (re || im) ? 1 : 0;
        }
    return static_cast<double>(differing) / static_cast<double>(ma.size());
}

/// KL divergence in bits between the computational-basis diagonals, each
/// clipped to at least `eps` and renormalized.
inline double kl(const DensityMatrix& a, const DensityMatrix& b, double eps = 1e-9) {
    detail::require_same_dim(a, b, "kl");
    const Eigen::VectorXd p0 = a.matrix().diagonal().real().cwiseMax(eps);
    const Eigen::VectorXd q0 = b.matrix().diagonal().real().cwiseMax(eps);
    const Eigen::VectorXd p = p0 / p0.sum();
    const Eigen::VectorXd q = q0 / q0.sum();
    double d = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) d += p(i) * std::log2(p(i) / q(i));
    return d;
}

/// A distance choice plus the decimal precision used by `hamming`.
struct DistanceSpec {
    DistanceId id = DistanceId::trace;
    int places = 5;  // hamming rounding

    friend bool operator==(const DistanceSpec&, const DistanceSpec&) = default;
};

inline double distance(const DistanceSpec& spec, const DensityMatrix& a, const DensityMatrix& b) {
    switch (spec.id) {
        case DistanceId::trace: return trace_distance(a, b);
        case DistanceId::hilbert_schmidt: return hilbert_schmidt(a, b);
        case DistanceId::bures: return bures(a, b);
        case DistanceId::hamming: return hamming(a, b, spec.places);
        case DistanceId::kl: return std::max(0.0, kl(a, b));
    }
    throw std::logic_error("unhandled distance id");
}

}  // namespace qksa
