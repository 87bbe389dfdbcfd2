#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "core.hpp"

namespace singcov {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void check_finite(const ComplexMatrix& a, const char* where) {
    if (a.size() == 0) throw input_error(std::string(where) + ": empty matrix");
    if (!a.allFinite()) throw input_error(std::string(where) + ": non-finite entries");
}

/// Square complex matrix validated to be Hermitian on construction
/// (max|A - A*| <= 1e-12 * max|A|). Stored exactly hermitized as (A + A*)/2.
class HermitianMatrix {
public:
    explicit HermitianMatrix(const ComplexMatrix& a) {
        check_finite(a, "HermitianMatrix");
        if (a.rows() != a.cols())
            throw structure_error("HermitianMatrix: matrix is " + std::to_string(a.rows()) + "x" +
                                  std::to_string(a.cols()) + ", expected square");
        const double scale = a.cwiseAbs().maxCoeff();
        const double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
        if (dev > 1e-12 * std::max(scale, 1e-300))
            throw structure_error("HermitianMatrix: |A - A*| = " + std::to_string(dev) +
                                  " exceeds 1e-12 * max|A|");
        m_ = 0.5 * (a + a.adjoint());
    }

    Index dim() const { return m_.rows(); }
    const ComplexMatrix& matrix() const { return m_; }
    operator const ComplexMatrix&() const { return m_; }

private:
    ComplexMatrix m_;
};

/// Eigendecomposition K = U D U* with eigenvalues sorted descending and the
/// numerical rank detected against tol_zero = dim * eps * max|eigenvalue|.
struct Spectrum {
    ComplexMatrix eigvecs;  // unitary, columns aligned with eigvals
    RealVector eigvals;     // descending
    Index rank = 0;
    double tol_zero = 0.0;
};

inline Spectrum eig_hermitian(const HermitianMatrix& k) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(k.matrix());
    if (solver.info() != Eigen::Success)
        throw structure_error("eig_hermitian: eigensolver failed to converge");
    const Index m = k.dim();
    Spectrum s;
    s.eigvecs.resize(m, m);
    s.eigvals.resize(m);
    // Eigen returns ascending order; flip to descending.
    for (Index i = 0; i < m; ++i) {
        s.eigvals(i) = solver.eigenvalues()(m - 1 - i);
        s.eigvecs.col(i) = solver.eigenvectors().col(m - 1 - i);
    }
    const double lmax = s.eigvals.cwiseAbs().maxCoeff();
    s.tol_zero = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * lmax;
    s.rank = 0;
    for (Index i = 0; i < m; ++i)
        if (s.eigvals(i) > s.tol_zero) ++s.rank;
    return s;
}

/// K = (1/N) X X* from an M x N data matrix whose columns are observations.
inline HermitianMatrix sample_covariance(const ComplexMatrix& x) {
    check_finite(x, "sample_covariance");
    const double n = static_cast<double>(x.cols());
    ComplexMatrix k = (x * x.adjoint()) / n;
    return HermitianMatrix(k);
}

/// Exponential-decay Toeplitz covariance, entries exp(-|i-j| / beta).
inline HermitianMatrix toeplitz_exp(Index m, double beta) {
    if (m < 1) throw input_error("toeplitz_exp: dimension must be >= 1");
    if (!(beta > 0.0)) throw input_error("toeplitz_exp: beta must be positive");
    ComplexMatrix s(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
            s(i, j) = std::exp(-std::abs(static_cast<double>(i - j)) / beta);
    return HermitianMatrix(s);
}

/// Squared-error metric (1/dim^2) Tr(A* A) = mean squared entry magnitude.
/// This is the normalization used by the benchmark sweeps; the conventional
/// norm sqrt(Tr(A* A)) is frobenius_norm below.
inline double frobenius_mean_sq(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw structure_error("frobenius_mean_sq: square input required");
    const double d = static_cast<double>(a.rows());
    return a.squaredNorm() / (d * d);
}

inline double frobenius_norm(const ComplexMatrix& a) { return a.norm(); }

/// Groups sorted eigenvalues into clusters of relative gap below rel_tol.
/// Returns the index ranges [begin, end) of each cluster, in input order.
inline std::vector<std::pair<Index, Index>> eigenvalue_clusters(const RealVector& vals,
                                                                double rel_tol = 1e-6) {
    std::vector<std::pair<Index, Index>> out;
    const Index n = vals.size();
    Index begin = 0;
    for (Index i = 1; i <= n; ++i) {
        bool split = (i == n);
        if (!split) {
            const double scale = std::max({std::abs(vals(i - 1)), std::abs(vals(i)), 1e-300});
            split = std::abs(vals(i) - vals(i - 1)) > rel_tol * scale;
        }
        if (split) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

}  // namespace singcov
