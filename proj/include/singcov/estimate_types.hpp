#pragma once

#include <optional>
#include <string>

#include "matrix.hpp"

namespace singcov {

enum class Method { auto_dispatch, exact, asymptotic, monte_carlo };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::auto_dispatch: return "auto";
        case Method::exact: return "exact";
        case Method::asymptotic: return "asymptotic";
        case Method::monte_carlo: return "monte-carlo";
    }
    return "?";
}

/// Knobs for the inverse-covariance / covariance estimators. L is the
/// dimension of the random projection; the method selects the evaluation
/// engine (auto: exact up to rank 64, asymptotic above, Monte Carlo on
/// request or as degeneracy fallback).
struct EstimatorConfig {
    Index L = 1;
    Method method = Method::auto_dispatch;
    std::size_t samples = 10000;   // Monte Carlo draws when method == monte_carlo
    std::uint64_t seed = 0;
    double degeneracy_tol = 1e-6;  // relative eigenvalue gap treated as coincident
    bool cov_rescale = true;       // multiply the cov estimate by M/L (trace preserving)
    unsigned threads = 0;          // 0: resolve from SINGCOV_THREADS / hardware
};

/// Diagonal of the inverse-covariance estimate of a rank-N nonnegative
/// diagonal matrix: per-entry values lambda on the positive block plus the
/// single constant mu shared by every zero position (absent when there is no
/// zero block). Standard errors are populated by the Monte Carlo path.
struct DiagonalEstimate {
    RealVector lambda;
    std::optional<double> mu;
    Method method_used = Method::exact;
    std::optional<RealVector> lambda_se;
    std::optional<double> mu_se;

    /// Full length-m diagonal (positive block first, then the mu block).
    RealVector full_diagonal(Index m) const {
        const Index n = lambda.size();
        if (m < n) throw input_error("DiagonalEstimate: ambient dimension below rank");
        if (m > n && !mu)
            throw degeneracy_error("DiagonalEstimate: zero block present but mu is absent");
        RealVector d(m);
        d.head(n) = lambda;
        for (Index i = n; i < m; ++i) d(i) = *mu;
        return d;
    }
};

}  // namespace singcov
