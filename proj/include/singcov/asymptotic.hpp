#pragma once

#include <cmath>

#include "matrix.hpp"

namespace singcov {

/// eta transform of the empirical spectrum: (1/N) sum 1/(1 + gamma d_k).
inline double eta_transform(const RealVector& d, double gamma) {
    if (!(gamma > 0.0)) throw input_error("eta_transform: gamma must be positive");
    double acc = 0.0;
    for (Index i = 0; i < d.size(); ++i) acc += 1.0 / (1.0 + gamma * d(i));
    return acc / static_cast<double>(d.size());
}

/// Shannon transform of the empirical spectrum: (1/N) sum log(1 + gamma d_k).
inline double shannon_transform(const RealVector& d, double gamma) {
    if (!(gamma > 0.0)) throw input_error("shannon_transform: gamma must be positive");
    double acc = 0.0;
    for (Index i = 0; i < d.size(); ++i) acc += std::log1p(gamma * d(i));
    return acc / static_cast<double>(d.size());
}

/// Large-dimension mu: the unique positive root of
///   g(mu) = sum_k 1/(1 + mu d_k) - (N - L) = 0.
/// g decreases strictly from g(0) = L, so a doubling bracket plus bisection
/// with Newton polish always converges; |g| <= 1e-12 at the returned root.
inline double mu_asymptotic(const RealVector& d, Index l) {
    const Index n = d.size();
    if (l < 1 || l >= n)
        throw degeneracy_error("mu_asymptotic: need 1 <= L < N; mu is infinite at L = N");
    for (Index i = 0; i < n; ++i)
        if (!(d(i) > 0.0))
            throw input_error("mu_asymptotic: spectrum entry " + std::to_string(i) +
                              " is not positive");
    const double target = static_cast<double>(n - l);
    auto g = [&](double mu) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) acc += 1.0 / (1.0 + mu * d(i));
        return acc - target;
    };
    auto dg = [&](double mu) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double t = 1.0 + mu * d(i);
            acc -= d(i) / (t * t);
        }
        return acc;
    };

    double hi = 1.0 / d.minCoeff();
    while (g(hi) > 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double val = g(mu);
        if (std::abs(val) <= 1e-12) break;
        const double step = val / dg(mu);
        const double next = mu - step;
        mu = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
        (g(mu) > 0.0 ? lo : hi) = mu;
    }
    return mu;
}

/// Sensitivity of the fixed point to one eigenvalue, by implicit
/// differentiation of sum_i 1/(1 + mu d_i) = N - L:
///   dmu/dd_k = -mu / [ (1 + mu d_k)^2 * sum_i d_i/(1 + mu d_i)^2 ].
inline double dmu_dd(const RealVector& d, double mu, Index k) {
    if (k < 0 || k >= d.size()) throw input_error("dmu_dd: index out of range");
    double denom = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
        const double t = 1.0 + mu * d(i);
        denom += d(i) / (t * t);
    }
    const double tk = 1.0 + mu * d(k);
    return -mu / (tk * tk * denom);
}

struct AsymptoticResult {
    double mu = 0.0;
    RealVector lambda;
    double beta = 0.0;      // N / L
    double residual = 0.0;  // |g(mu)| at the accepted fixed point
};

/// Large-dimension positive-block diagonal, from differentiating the
/// Shannon-transform expansion of the expected log determinant:
///   lambda_k ~ (dmu/dd_k) sum_i d_i/(1+mu d_i) + mu/(1+mu d_k)
///              - (L/mu) (dmu/dd_k).
inline RealVector lambda_asymptotic(const RealVector& d, Index l) {
    const Index n = d.size();
    const double mu = mu_asymptotic(d, l);
    double weighted = 0.0;
    for (Index i = 0; i < n; ++i) weighted += d(i) / (1.0 + mu * d(i));
    RealVector lambda(n);
    for (Index k = 0; k < n; ++k) {
        const double dmu = dmu_dd(d, mu, k);
        lambda(k) = dmu * weighted + mu / (1.0 + mu * d(k)) - (static_cast<double>(l) / mu) * dmu;
    }
    return lambda;
}

inline AsymptoticResult invcov_diag_asymptotic(const RealVector& d, Index l) {
    AsymptoticResult res;
    res.mu = mu_asymptotic(d, l);
    res.lambda = lambda_asymptotic(d, l);
    res.beta = static_cast<double>(d.size()) / static_cast<double>(l);
    double acc = 0.0;
    for (Index i = 0; i < d.size(); ++i) acc += 1.0 / (1.0 + res.mu * d(i));
    res.residual = std::abs(acc - static_cast<double>(d.size() - l));
    return res;
}

}  // namespace singcov
