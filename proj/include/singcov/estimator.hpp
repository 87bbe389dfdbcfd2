#pragma once

#include <string>

#include "asymptotic.hpp"
#include "estimate_types.hpp"
#include "exact.hpp"
#include "haar.hpp"
#include "matrix.hpp"

namespace singcov {

namespace detail {

inline DiagonalEstimate invcov_diag_monte_carlo(const RealVector& eigvals, Index rank, Index l,
                                                const EstimatorConfig& cfg) {
    const Index m = eigvals.size();
    const RealVector d = eigvals.cwiseMax(0.0);
    const McEstimate mc = mc_invcov(d, l, std::max<std::size_t>(cfg.samples, 100),
                                    RngStream(cfg.seed, 0), cfg.threads);
    DiagonalEstimate est;
    est.method_used = Method::monte_carlo;
    est.lambda.resize(rank);
    RealVector se(rank);
    for (Index i = 0; i < rank; ++i) {
        est.lambda(i) = mc.mean(i, i).real();
        se(i) = mc.std_error(i, i);
    }
    est.lambda_se = se;
    if (m > rank) {
        // The zero-block diagonal entries share one expectation; pool them.
        double acc = 0.0, worst_se = 0.0;
        for (Index i = rank; i < m; ++i) {
            acc += mc.mean(i, i).real();
            worst_se = std::max(worst_se, mc.std_error(i, i));
        }
        est.mu = acc / static_cast<double>(m - rank);
        est.mu_se = worst_se;
    }
    return est;
}

inline DiagonalEstimate invcov_diag_asymptotic_est(const RealVector& eigvals, Index rank, Index l) {
    const Index m = eigvals.size();
    const RealVector dn = eigvals.head(rank);
    DiagonalEstimate est;
    est.method_used = Method::asymptotic;
    if (l == rank) {
        if (m > rank)
            throw degeneracy_error(
                "invcov: mu is infinite when L equals the rank and zero eigenvalues remain; "
                "choose L < rank");
        est.lambda = dn.cwiseInverse();
        return est;
    }
    est.lambda = lambda_asymptotic(dn, l);
    if (m > rank) est.mu = mu_asymptotic(dn, l);
    return est;
}

}  // namespace detail

/// Inverse-covariance diagonal for a descending nonnegative spectrum of
/// ambient dimension M, dispatched per the configured method. Auto dispatch
/// uses the exact engine up to rank 64, the asymptotic engine above, and
/// falls back to Monte Carlo when the exact engine reports an eigenvalue
/// degeneracy it cannot resolve.
inline DiagonalEstimate invcov_diag_dispatch(const RealVector& eigvals, Index rank,
                                             const EstimatorConfig& cfg,
                                             std::string* note = nullptr) {
    const Index l = cfg.L;
    if (l < 1 || l > rank)
        throw input_error("invcov: L=" + std::to_string(l) + " exceeds rank " +
                          std::to_string(rank));
    switch (cfg.method) {
        case Method::exact:
            return invcov_diag_exact(eigvals, l, cfg.degeneracy_tol);
        case Method::asymptotic:
            return detail::invcov_diag_asymptotic_est(eigvals, rank, l);
        case Method::monte_carlo:
            return detail::invcov_diag_monte_carlo(eigvals, rank, l, cfg);
        case Method::auto_dispatch:
            break;
    }
    if (rank > detail::kExactMaxRank) return detail::invcov_diag_asymptotic_est(eigvals, rank, l);
    try {
        return invcov_diag_exact(eigvals, l, cfg.degeneracy_tol);
    } catch (const degeneracy_error& e) {
        if (l == rank) throw;  // infinite mu is not rescued by sampling
        if (note) *note = std::string("exact engine degenerate, using monte-carlo: ") + e.what();
        return detail::invcov_diag_monte_carlo(eigvals, rank, l, cfg);
    }
}

struct InvcovResult {
    ComplexMatrix matrix;
    Spectrum spectrum;
    DiagonalEstimate diag;
    std::string note;  // set when auto dispatch had to fall back
};

inline InvcovResult invcov_full(const HermitianMatrix& k, const EstimatorConfig& cfg) {
    InvcovResult res;
    res.spectrum = eig_hermitian(k);
    for (Index i = 0; i < res.spectrum.eigvals.size(); ++i)
        if (res.spectrum.eigvals(i) < -res.spectrum.tol_zero)
            throw input_error("invcov: input is not positive semidefinite (eigenvalue " +
                              std::to_string(res.spectrum.eigvals(i)) + ")");
    res.diag = invcov_diag_dispatch(res.spectrum.eigvals, res.spectrum.rank, cfg, &res.note);
    const RealVector full = res.diag.full_diagonal(k.dim());
    res.matrix = res.spectrum.eigvecs * full.asDiagonal() * res.spectrum.eigvecs.adjoint();
    return res;
}

/// invcov_L(K) = U invcov_L(D) U*: the estimate of the inverse covariance.
/// Eigenvectors of K are preserved; zero eigenvalues all map to mu.
inline HermitianMatrix invcov(const HermitianMatrix& k, const EstimatorConfig& cfg) {
    return HermitianMatrix(invcov_full(k, cfg).matrix);
}

/// cov_L(K): the projected-covariance average, always the diagonal-loading
/// closed form (no sampling needed), rescaled by M/L when configured.
inline HermitianMatrix cov(const HermitianMatrix& k, const EstimatorConfig& cfg) {
    return cov_closed_form(k, cfg.L, cfg.cov_rescale);
}

/// Estimate of the covariance itself: the matrix inverse of invcov_L(K),
/// taken in the shared eigenbasis (reciprocal diagonal).
inline HermitianMatrix sigma_estimate_via_invcov(const HermitianMatrix& k,
                                                 const EstimatorConfig& cfg) {
    const InvcovResult res = invcov_full(k, cfg);
    RealVector full = res.diag.full_diagonal(k.dim());
    for (Index i = 0; i < full.size(); ++i)
        if (!(full(i) > 0.0))
            throw degeneracy_error("sigma_estimate_via_invcov: nonpositive estimate entry " +
                                   std::to_string(full(i)) + "; cannot invert");
    const RealVector inv = full.cwiseInverse();
    return HermitianMatrix(res.spectrum.eigvecs * inv.asDiagonal() *
                           res.spectrum.eigvecs.adjoint());
}

}  // namespace singcov
