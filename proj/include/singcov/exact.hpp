#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <functional>
#include <numeric>
#include <type_traits>
#include <vector>

#include "estimate_types.hpp"
#include "logpoly.hpp"
#include "matrix.hpp"

namespace singcov {

// ---------------------------------------------------------------------------
// Closed-form engine for ensemble trace averages over the Stiefel manifold.
//
// Everything here reduces to ratios det(G)/det(V) where V is the Vandermonde
// matrix of the spectrum d_1..d_N (rows d_i^{N-1}, ..., d_i, 1) and G replaces
// one row of V by g(d_i) for some row function g. Expanding both determinants
// by cofactors of the replaced row shows
//
//     det(G)/det(V) = coefficient of x^{N-r} in the degree-(N-1)
//                     polynomial interpolant of g at the nodes d_i,
//
// where r is the replaced row. The engine therefore never forms a
// determinant: it interpolates g through the spectrum (Newton divided
// differences, expanded to the monomial basis) and reads off a coefficient.
// The coefficient extraction is exactly as ill-conditioned as the underlying
// Vandermonde, so the kernel runs in extended precision chosen by N; inputs
// and outputs stay double.
// ---------------------------------------------------------------------------

namespace detail {

using float50 = boost::multiprecision::cpp_bin_float_50;
using float100 = boost::multiprecision::cpp_bin_float_100;

constexpr Index kExactMaxRank = 64;
constexpr int kMaxPowerMoment = 64;

template <typename Real>
struct SortedNodes {
    std::vector<Real> x;       // ascending
    std::vector<Index> orig;   // orig[i] = index of x[i] in the input vector
};

template <typename Real>
SortedNodes<Real> sort_nodes(const RealVector& d) {
    const Index n = d.size();
    SortedNodes<Real> s;
    s.orig.resize(n);
    std::iota(s.orig.begin(), s.orig.end(), Index(0));
    std::sort(s.orig.begin(), s.orig.end(), [&](Index a, Index b) { return d(a) < d(b); });
    s.x.resize(n);
    for (Index i = 0; i < n; ++i) s.x[i] = Real(d(s.orig[i]));
    return s;
}

/// Monomial coefficients (c[j] multiplies x^j, size n) of the polynomial
/// interpolating values v at ascending nodes x.
template <typename Real>
std::vector<Real> interp_monomial(const std::vector<Real>& x, std::vector<Real> v) {
    const std::size_t n = x.size();
    for (std::size_t j = 1; j < n; ++j)
        for (std::size_t i = n - 1; i >= j; --i)
            v[i] = (v[i] - v[i - 1]) / (x[i] - x[i - j]);
    std::vector<Real> c{v[n - 1]};
    for (std::size_t ii = n - 1; ii-- > 0;) {
        std::vector<Real> nc(c.size() + 1, Real(0));
        for (std::size_t t = 0; t < c.size(); ++t) {
            nc[t + 1] += c[t];
            nc[t] -= x[ii] * c[t];
        }
        nc[0] += v[ii];
        c = std::move(nc);
    }
    return c;
}

/// Coefficients of prod_i (x - x_i), size n+1.
template <typename Real>
std::vector<Real> poly_from_roots(const std::vector<Real>& x) {
    std::vector<Real> w{Real(1)};
    for (const Real& r : x) {
        std::vector<Real> nw(w.size() + 1, Real(0));
        for (std::size_t t = 0; t < w.size(); ++t) {
            nw[t + 1] += w[t];
            nw[t] -= r * w[t];
        }
        w = std::move(nw);
    }
    return w;
}

/// Monomial coefficients of the Lagrange basis polynomial for node m:
/// deflate omega = prod (x - x_i) by (x - x_m) and normalize at x_m.
template <typename Real>
std::vector<Real> lagrange_basis(const std::vector<Real>& x, const std::vector<Real>& omega,
                                 std::size_t m) {
    const std::size_t n = x.size();
    std::vector<Real> q(n);
    q[n - 1] = omega[n];
    for (std::size_t t = n - 1; t >= 1; --t) q[t - 1] = omega[t] + x[m] * q[t];
    Real denom(0);  // q(x_m) = omega'(x_m)
    for (std::size_t t = n; t-- > 0;) denom = denom * x[m] + q[t];
    for (auto& c : q) c /= denom;
    return q;
}

template <typename Real>
Real poly_eval(const std::vector<Real>& c, const Real& x) {
    Real acc(0);
    for (std::size_t t = c.size(); t-- > 0;) acc = acc * x + c[t];
    return acc;
}

template <typename Real>
Real poly_deriv_eval(const std::vector<Real>& c, const Real& x) {
    Real acc(0);
    for (std::size_t t = c.size(); t-- > 1;) acc = acc * x + Real(t) * c[t];
    return acc;
}

/// (N-(k+1))! / (L-(k+1))! = prod of the integers (L-k) .. (N-k-1).
template <typename Real>
Real hook_coefficient(Index n, Index L, Index k) {
    Real acc(1);
    for (Index t = L - k; t <= n - k - 1; ++t) acc *= Real(t);
    return acc;
}

template <typename Real>
BasicLogPoly<Real> to_real_logpoly(const LogPoly& f) {
    BasicLogPoly<Real> out;
    out.poly.assign(f.poly.begin(), f.poly.end());
    out.logpoly.assign(f.logpoly.begin(), f.logpoly.end());
    return out;
}

/// Ensemble average of Tr f(P* D P) over N x L frames with orthonormal
/// columns: sum over k of hook coefficient times the x^{N-k-1} interpolation
/// coefficient of the k-th integrated row function.
template <typename Real>
double trace_average_impl(const RealVector& d, Index L, const BasicLogPoly<Real>& f) {
    const Index n = d.size();
    auto s = sort_nodes<Real>(d);
    Real total(0);
    for (Index k = 0; k < L; ++k) {
        const auto row = f.shifted(static_cast<std::size_t>(L - 1 - k))
                             .integrated(static_cast<std::size_t>(n - L));
        std::vector<Real> v(n);
        for (Index i = 0; i < n; ++i) v[i] = row.eval(s.x[i]);
        const auto c = interp_monomial(s.x, std::move(v));
        total += hook_coefficient<Real>(n, L, k) * c[n - 1 - k];
    }
    return static_cast<double>(total);
}

template <typename Real>
double mu_impl(const RealVector& d, Index L) {
    const Index n = d.size();
    auto s = sort_nodes<Real>(d);
    const auto g = BasicLogPoly<Real>::log_x().shifted(static_cast<std::size_t>(n - L - 1));
    std::vector<Real> v(n);
    for (Index i = 0; i < n; ++i) v[i] = g.eval(s.x[i]);
    const auto c = interp_monomial(s.x, std::move(v));
    return static_cast<double>(c[n - L]);
}

/// Diagonal of the inverse-covariance average on the positive block:
/// lambda_m = d/dd_m of the Tr log ensemble average. Perturbing node m moves
/// the interpolant p of a row function g by (g'(d_m) - p'(d_m)) * basis_m, so
/// each lambda entry is a weighted sum of Lagrange basis coefficients.
template <typename Real>
RealVector lambda_impl(const RealVector& d, Index L) {
    const Index n = d.size();
    auto s = sort_nodes<Real>(d);
    const auto omega = poly_from_roots(s.x);
    std::vector<std::vector<Real>> basis(n);
    for (Index m = 0; m < n; ++m)
        basis[m] = lagrange_basis(s.x, omega, static_cast<std::size_t>(m));

    std::vector<Real> acc(n, Real(0));
    for (Index k = 0; k < L; ++k) {
        const auto row = BasicLogPoly<Real>::log_x()
                             .shifted(static_cast<std::size_t>(L - 1 - k))
                             .integrated(static_cast<std::size_t>(n - L));
        std::vector<Real> v(n);
        for (Index i = 0; i < n; ++i) v[i] = row.eval(s.x[i]);
        const auto c = interp_monomial(s.x, std::move(v));
        const Real coeff = hook_coefficient<Real>(n, L, k);
        for (Index m = 0; m < n; ++m) {
            const Real slope = row.eval_derivative(s.x[m]) - poly_deriv_eval(c, s.x[m]);
            acc[m] += coeff * slope * basis[m][n - 1 - k];
        }
    }
    RealVector out(n);
    for (Index m = 0; m < n; ++m) out(s.orig[m]) = static_cast<double>(acc[m]);
    return out;
}

template <typename Real>
double schur_impl(const RealVector& d, int power, int k) {
    const Index n = d.size();
    auto s = sort_nodes<Real>(d);
    std::vector<Real> v(n);
    for (Index i = 0; i < n; ++i) {
        Real acc(1);
        for (int t = 0; t < static_cast<int>(n) + power - k - 1; ++t) acc *= s.x[i];
        v[i] = acc;
    }
    const auto c = interp_monomial(s.x, std::move(v));
    const double val = static_cast<double>(c[n - 1 - k]);
    return (k % 2 == 0) ? val : -val;
}

template <typename Fn>
auto dispatch_precision(Index n, Fn&& fn) {
    if (n <= 32) return fn(std::type_identity<float50>{});
    return fn(std::type_identity<float100>{});
}

inline void check_exact_spectrum(const RealVector& d, Index L, const char* where) {
    if (d.size() < 1) throw input_error(std::string(where) + ": empty spectrum");
    if (d.size() > kExactMaxRank)
        throw input_error(std::string(where) + ": rank " + std::to_string(d.size()) +
                          " exceeds the exact-engine limit " + std::to_string(kExactMaxRank) +
                          "; use the asymptotic method");
    for (Index i = 0; i < d.size(); ++i)
        if (!(d(i) > 0.0))
            throw input_error(std::string(where) + ": spectrum entry " + std::to_string(i) +
                              " is not positive");
    if (L < 1 || L > d.size())
        throw input_error(std::string(where) + ": L=" + std::to_string(L) +
                          " outside [1, " + std::to_string(d.size()) + "]");
}

inline bool has_degenerate_cluster(const RealVector& d, double rel_tol) {
    RealVector sorted = d;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    for (const auto& [b, e] : eigenvalue_clusters(sorted, rel_tol))
        if (e - b > 1) return true;
    return false;
}

inline RealVector perturb_clusters(const RealVector& d, double rel_tol, double scale) {
    const Index n = d.size();
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), Index(0));
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return d(a) < d(b); });
    RealVector sorted(n);
    for (Index i = 0; i < n; ++i) sorted(i) = d(idx[i]);
    RealVector out = d;
    for (const auto& [b, e] : eigenvalue_clusters(sorted, rel_tol)) {
        if (e - b <= 1) continue;
        for (Index j = b; j < e; ++j) {
            const Index within = j - b;
            const double sign = (within % 2 == 0) ? 1.0 : -1.0;
            out(idx[j]) = d(idx[j]) * (1.0 + sign * static_cast<double>(within) * scale);
        }
    }
    return out;
}

/// Coincident eigenvalues make the interpolation nodes collide (the closed
/// forms are 0/0 there). Evaluate at two multiplicative splittings of each
/// cluster and accept if they agree; otherwise report the degeneracy so the
/// caller can fall back to Monte Carlo.
template <typename Fn>
RealVector degeneracy_guard(const RealVector& d, double rel_tol, const char* where, Fn&& eval) {
    if (!has_degenerate_cluster(d, rel_tol)) return eval(d);
    const RealVector r1 = eval(perturb_clusters(d, rel_tol, 1e-7));
    const RealVector r2 = eval(perturb_clusters(d, rel_tol, 1e-8));
    double worst = 0.0;
    for (Index i = 0; i < r1.size(); ++i) {
        const double scale = std::max(std::abs(r2(i)), 1e-300);
        worst = std::max(worst, std::abs(r1(i) - r2(i)) / scale);
    }
    if (worst > 1e-4)
        throw degeneracy_error(std::string(where) +
                               ": repeated eigenvalues; split evaluations disagree (rel " +
                               std::to_string(worst) + "), fall back to monte-carlo");
    return r2;
}

}  // namespace detail

/// Exact value of the ensemble average of Tr f(P* D P) over orthonormal
/// N x L frames P, for f in the polynomial + x^m log x family.
inline double stiefel_trace_f(const RealVector& d, Index L, const LogPoly& f,
                              double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "stiefel_trace_f");
    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::trace_average_impl<R>(dd, L, detail::to_real_logpoly<R>(f));
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "stiefel_trace_f", eval)(0);
}

inline double stiefel_trace_log(const RealVector& d, Index L, double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "stiefel_trace_log");
    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::trace_average_impl<R>(dd, L, BasicLogPoly<R>::log_x());
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "stiefel_trace_log", eval)(0);
}

inline double stiefel_trace_power(const RealVector& d, Index L, int n,
                                  double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "stiefel_trace_power");
    if (n < 0) throw input_error("stiefel_trace_power: negative power; use stiefel_trace_inverse");
    if (n == 0) return static_cast<double>(L);
    if (n > detail::kMaxPowerMoment)
        throw input_error("stiefel_trace_power: power moment capped at " +
                          std::to_string(detail::kMaxPowerMoment));
    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::trace_average_impl<R>(dd, L, BasicLogPoly<R>::monomial(n));
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "stiefel_trace_power", eval)(0);
}

/// Expected trace of the inverse of the projected Wishart-type matrix,
/// mu = E Tr((X* D X)^{-1}) over N x L standard complex Gaussian X. Equals
/// the x^{N-L} interpolation coefficient of x^{N-L-1} log x at the spectrum.
inline double mu_exact(const RealVector& d, Index L, double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "mu_exact");
    if (L == d.size())
        throw degeneracy_error("mu_exact: mu is infinite when L equals the rank; choose L < N");
    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::mu_impl<R>(dd, L);
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "mu_exact", eval)(0);
}

/// Ensemble average of Tr((P* D P)^{-1}): the hook sum collapses to its last
/// term (every earlier replaced row is proportional to an existing
/// Vandermonde row), leaving (N-L) * mu. For L = N the frame is square
/// unitary and the average is Tr(D^{-1}) identically.
inline double stiefel_trace_inverse(const RealVector& d, Index L, double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "stiefel_trace_inverse");
    if (L == d.size()) return d.cwiseInverse().sum();
    return static_cast<double>(d.size() - L) * mu_exact(d, L, degeneracy_tol);
}

/// Positive-block diagonal of the inverse-covariance average,
/// lambda_k = d/dd_k of the Tr log average. For L = N this is exactly 1/d.
inline RealVector lambda_exact(const RealVector& d, Index L, double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "lambda_exact");
    if (L == d.size()) return d.cwiseInverse();
    auto eval = [&](const RealVector& dd) -> RealVector {
        return detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::lambda_impl<R>(dd, L);
        });
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "lambda_exact", eval);
}

/// Schur polynomial of the hook partition (n-k, 1^k) at diag(d), via the
/// bialternant ratio. Power-sum expansions of Tr(A^n) use these with
/// alternating signs.
inline double schur_hook(const RealVector& d, int n, int k, double degeneracy_tol = 1e-6) {
    if (n < 1) throw input_error("schur_hook: power must be >= 1");
    if (k < 0 || k > std::min<Index>(n - 1, d.size() - 1))
        throw input_error("schur_hook: hook index k outside [0, min(n-1, N-1)]");
    detail::check_exact_spectrum(d, 1, "schur_hook");
    if (n > detail::kMaxPowerMoment)
        throw input_error("schur_hook: power capped at " + std::to_string(detail::kMaxPowerMoment));
    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            return detail::schur_impl<R>(dd, n, k);
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "schur_hook", eval)(0);
}

/// Adaptive Chebyshev interpolant on [d_min, d_max] for f outside the
/// polynomial/log family, evaluated through the monomial path.
inline double stiefel_trace_f(const RealVector& d, Index L, const std::function<double(double)>& f,
                              double degeneracy_tol = 1e-6) {
    detail::check_exact_spectrum(d, L, "stiefel_trace_f");
    double lo = d.minCoeff(), hi = d.maxCoeff();
    if (hi - lo < 1e-12 * hi) {
        const double pad = std::max(1e-9 * hi, 1e-300);
        lo -= pad;
        hi += pad;
    }

    // Chebyshev coefficients at increasing degree until the tail decays.
    std::vector<double> cheb;
    for (int deg = 8; deg <= 64; deg *= 2) {
        const int pts = deg + 1;
        std::vector<double> fv(pts);
        for (int j = 0; j < pts; ++j) {
            const double t = std::cos(M_PI * (j + 0.5) / pts);
            fv[j] = f(0.5 * (hi - lo) * t + 0.5 * (hi + lo));
        }
        cheb.assign(pts, 0.0);
        for (int k = 0; k < pts; ++k) {
            double acc = 0.0;
            for (int j = 0; j < pts; ++j) acc += fv[j] * std::cos(M_PI * k * (j + 0.5) / pts);
            cheb[k] = 2.0 * acc / pts;
        }
        cheb[0] *= 0.5;
        double cmax = 0.0;
        for (double c : cheb) cmax = std::max(cmax, std::abs(c));
        const double tail = std::max(std::abs(cheb[pts - 1]), std::abs(cheb[pts - 2]));
        if (tail < 1e-12 * std::max(cmax, 1e-300) || deg == 64) {
            while (cheb.size() > 1 && std::abs(cheb.back()) < 1e-14 * std::max(cmax, 1e-300))
                cheb.pop_back();
            break;
        }
    }

    auto eval = [&](const RealVector& dd) -> RealVector {
        const double v = detail::dispatch_precision(dd.size(), [&]<typename R>(std::type_identity<R>) {
            // Convert sum c_k T_k((2x - hi - lo)/(hi - lo)) to monomials.
            const R alpha = R(2) / (R(hi) - R(lo));
            const R beta = -(R(hi) + R(lo)) / (R(hi) - R(lo));
            std::vector<R> tkm1{R(1)};                // T_0
            std::vector<R> tk{beta, alpha};           // T_1
            std::vector<R> acc(cheb.size(), R(0));
            acc[0] += R(cheb[0]);
            if (cheb.size() > 1)
                for (std::size_t t = 0; t < tk.size(); ++t) acc[t] += R(cheb[1]) * tk[t];
            for (std::size_t k = 2; k < cheb.size(); ++k) {
                std::vector<R> tkp1(k + 1, R(0));
                for (std::size_t t = 0; t < tk.size(); ++t) {
                    tkp1[t + 1] += R(2) * alpha * tk[t];
                    tkp1[t] += R(2) * beta * tk[t];
                }
                for (std::size_t t = 0; t < tkm1.size(); ++t) tkp1[t] -= tkm1[t];
                for (std::size_t t = 0; t < tkp1.size(); ++t) acc[t] += R(cheb[k]) * tkp1[t];
                tkm1 = std::move(tk);
                tk = std::move(tkp1);
            }
            BasicLogPoly<R> poly;
            poly.poly = std::move(acc);
            return detail::trace_average_impl<R>(dd, L, poly);
        });
        return RealVector::Constant(1, v);
    };
    return detail::degeneracy_guard(d, degeneracy_tol, "stiefel_trace_f", eval)(0);
}

/// Diagonal-loading closed form for the projected-covariance average:
///   L / ((M^2 - 1) M) * [ (M L - 1) K + (M - L) Tr(K) I ],
/// optionally rescaled by M/L so the trace of K is preserved.
inline HermitianMatrix cov_closed_form(const HermitianMatrix& k, Index L, bool rescale = true) {
    const Index m = k.dim();
    if (L < 1 || L > m)
        throw input_error("cov_closed_form: L=" + std::to_string(L) + " outside [1, " +
                          std::to_string(m) + "]");
    if (m == 1) return k;  // 1x1 frame is a unit scalar; the average is K itself
    const double md = static_cast<double>(m), ld = static_cast<double>(L);
    const double denom = (md * md - 1.0) * md;
    const double tr = k.matrix().trace().real();
    ComplexMatrix out = (ld * (md * ld - 1.0) / denom) * k.matrix();
    out.diagonal().array() += ld * (md - ld) / denom * tr;
    if (rescale) out *= md / ld;
    return HermitianMatrix(out);
}

/// Inverse-covariance diagonal of a nonnegative spectrum of ambient size M:
/// exact lambda on the positive block, mu on the zero block. The positive
/// entries must precede the zeros (the natural descending-eigenvalue layout).
inline DiagonalEstimate invcov_diag_exact(const RealVector& d_full, Index L,
                                          double degeneracy_tol = 1e-6) {
    const Index m = d_full.size();
    if (m < 1) throw input_error("invcov_diag_exact: empty spectrum");
    const double dmax = d_full.maxCoeff();
    if (!(dmax > 0.0)) throw input_error("invcov_diag_exact: spectrum has no positive entries");
    const double tol = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * dmax;
    Index n = 0;
    for (Index i = 0; i < m; ++i) {
        if (d_full(i) > tol) {
            if (n != i)
                throw input_error("invcov_diag_exact: positive entries must precede zeros");
            ++n;
        } else if (d_full(i) < -tol) {
            throw input_error("invcov_diag_exact: negative eigenvalue " +
                              std::to_string(d_full(i)) + " (input not PSD)");
        }
    }
    if (L < 1 || L > n)
        throw input_error("invcov_diag_exact: L=" + std::to_string(L) + " exceeds rank " +
                          std::to_string(n));
    DiagonalEstimate est;
    est.method_used = Method::exact;
    const RealVector dn = d_full.head(n);
    if (L == n) {
        if (m > n)
            throw degeneracy_error(
                "invcov_diag_exact: mu is infinite when L equals the rank and zero eigenvalues "
                "remain (rank " + std::to_string(n) + " < M = " + std::to_string(m) +
                "); choose L < rank");
        est.lambda = dn.cwiseInverse();
        return est;
    }
    est.lambda = lambda_exact(dn, L, degeneracy_tol);
    if (m > n) est.mu = mu_exact(dn, L, degeneracy_tol);
    return est;
}

}  // namespace singcov
