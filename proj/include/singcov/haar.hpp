#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "core.hpp"
#include "matrix.hpp"

namespace singcov {

/// Haar-distributed L x M frame with orthonormal rows (Phi Phi* = I_L):
/// complex Gaussian matrix, thin QR, then per-column phase correction by
/// the sign of the R diagonal so the factor is exactly Haar.
inline ComplexMatrix sample_haar(Index l, Index m, RngStream& rng) {
    if (l < 1 || l > m)
        throw input_error("sample_haar: need 1 <= L <= M, got L=" + std::to_string(l) +
                          ", M=" + std::to_string(m));
    ComplexMatrix a(m, l);
    for (Index j = 0; j < l; ++j)
        for (Index i = 0; i < m; ++i) a(i, j) = rng.cnormal();
    Eigen::HouseholderQR<ComplexMatrix> qr(a);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(m, l);
    for (Index j = 0; j < l; ++j) {
        const std::complex<double> r = qr.matrixQR()(j, j);
        const double mag = std::abs(r);
        if (mag > 0.0) q.col(j) *= r / mag;
    }
    return q.adjoint();
}

/// Entrywise mean and standard error of a matrix-valued Monte Carlo run.
struct McEstimate {
    ComplexMatrix mean;
    Eigen::MatrixXd std_error;  // per-entry standard error of the mean
    std::size_t samples = 0;
};

namespace detail {

struct WelfordMatrix {
    std::size_t count = 0;
    ComplexMatrix mean;
    Eigen::MatrixXd m2;

    void init(Index rows, Index cols) {
        count = 0;
        mean = ComplexMatrix::Zero(rows, cols);
        m2 = Eigen::MatrixXd::Zero(rows, cols);
    }

    void add(const ComplexMatrix& x) {
        ++count;
        const ComplexMatrix delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += (delta.conjugate().cwiseProduct(x - mean)).real();
    }

    void merge(const WelfordMatrix& o) {
        if (o.count == 0) return;
        if (count == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
        const ComplexMatrix delta = o.mean - mean;
        m2 += o.m2 + delta.cwiseAbs2() * (na * nb / (na + nb));
        mean += delta * (nb / (na + nb));
        count += o.count;
    }
};

constexpr std::size_t kMcChunk = 256;

/// Evaluates draw(sample_rng, sample_index) for S samples. Each sample owns
/// the substream keyed by its index and chunks are merged in index order, so
/// the estimate is bit-identical for any worker count.
template <typename DrawFn>
McEstimate mc_matrix_mean(Index rows, Index cols, std::size_t s, const RngStream& rng,
                          unsigned threads, DrawFn&& draw) {
    if (s < 2) throw input_error("monte carlo: need at least 2 samples");
    const std::size_t n_chunks = (s + kMcChunk - 1) / kMcChunk;
    std::vector<WelfordMatrix> acc(n_chunks);
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    run_chunks(n_chunks, resolve_thread_count(threads), [&](std::size_t c) {
        if (failed.load()) return;
        try {
            auto& w = acc[c];
            w.init(rows, cols);
            const std::size_t lo = c * kMcChunk, hi = std::min(s, lo + kMcChunk);
            for (std::size_t i = lo; i < hi; ++i) {
                RngStream sr = rng.substream(i);
                w.add(draw(sr, i));
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    WelfordMatrix total;
    total.init(rows, cols);
    for (const auto& w : acc) total.merge(w);
    McEstimate est;
    est.mean = total.mean;
    est.samples = total.count;
    const double n = static_cast<double>(total.count);
    est.std_error = (total.m2 / (n * (n - 1.0))).cwiseSqrt();
    return est;
}

inline Index diag_rank(const RealVector& d) {
    const double tol = static_cast<double>(d.size()) * std::numeric_limits<double>::epsilon() *
                       std::max(d.cwiseAbs().maxCoeff(), 1e-300);
    Index r = 0;
    for (Index i = 0; i < d.size(); ++i)
        if (d(i) > tol) ++r;
    return r;
}

}  // namespace detail

/// Monte Carlo estimate of the inverse-covariance average
/// E[Phi* (Phi D Phi*)^{-1} Phi] over Haar frames, with the inner inversion
/// done as a Cholesky solve.
inline McEstimate mc_invcov(const RealVector& d, Index l, std::size_t s, const RngStream& rng,
                            unsigned threads = 0) {
    const Index m = d.size();
    if (l < 1 || l > detail::diag_rank(d))
        throw input_error("mc_invcov: L=" + std::to_string(l) + " exceeds rank " +
                          std::to_string(detail::diag_rank(d)));
    return detail::mc_matrix_mean(m, m, s, rng, threads, [&](RngStream& sr, std::size_t idx) {
        const ComplexMatrix phi = sample_haar(l, m, sr);
        const ComplexMatrix reduced = phi * d.asDiagonal() * phi.adjoint();
        Eigen::LLT<ComplexMatrix> llt(reduced);
        if (llt.info() != Eigen::Success)
            throw ensemble_error("mc_invcov: singular reduced matrix at draw " +
                                 std::to_string(idx));
        return ComplexMatrix(phi.adjoint() * llt.solve(phi));
    });
}

inline McEstimate mc_invcov(const Spectrum& spec, Index l, std::size_t s, const RngStream& rng,
                            unsigned threads = 0) {
    return mc_invcov(spec.eigvals, l, s, rng, threads);
}

/// Monte Carlo estimate of E[Phi* (Phi D Phi*) Phi].
inline McEstimate mc_cov(const RealVector& d, Index l, std::size_t s, const RngStream& rng,
                         unsigned threads = 0) {
    const Index m = d.size();
    if (l < 1 || l > m) throw input_error("mc_cov: need 1 <= L <= M");
    return detail::mc_matrix_mean(m, m, s, rng, threads, [&](RngStream& sr, std::size_t) {
        const ComplexMatrix phi = sample_haar(l, m, sr);
        return ComplexMatrix(phi.adjoint() * (phi * d.asDiagonal() * phi.adjoint()) * phi);
    });
}

/// Monte Carlo estimate of E[Phi* f(Phi D Phi*) Phi], f applied through the
/// eigendecomposition of the L x L reduced matrix.
inline McEstimate mc_fcov(const RealVector& d, const std::function<double(double)>& f, Index l,
                          std::size_t s, const RngStream& rng, unsigned threads = 0) {
    const Index m = d.size();
    if (l < 1 || l > m) throw input_error("mc_fcov: need 1 <= L <= M");
    return detail::mc_matrix_mean(m, m, s, rng, threads, [&](RngStream& sr, std::size_t idx) {
        const ComplexMatrix phi = sample_haar(l, m, sr);
        const ComplexMatrix reduced = phi * d.asDiagonal() * phi.adjoint();
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(reduced);
        RealVector fe(l);
        for (Index i = 0; i < l; ++i) {
            fe(i) = f(eig.eigenvalues()(i));
            if (!std::isfinite(fe(i)))
                throw ensemble_error("mc_fcov: f undefined at reduced eigenvalue " +
                                     std::to_string(eig.eigenvalues()(i)) + " in draw " +
                                     std::to_string(idx));
        }
        const ComplexMatrix fred =
            eig.eigenvectors() * fe.asDiagonal() * eig.eigenvectors().adjoint();
        return ComplexMatrix(phi.adjoint() * fred * phi);
    });
}

/// Average of Phi* (Phi D Phi*)^{-1} Phi over the L x N permutation matrices,
/// in closed form: (L/N) D^{-1}.
inline RealVector permutation_invcov_exact(const RealVector& d, Index l) {
    const Index n = d.size();
    if (l < 1 || l > n) throw input_error("permutation_invcov_exact: need 1 <= L <= N");
    for (Index i = 0; i < n; ++i)
        if (!(d(i) > 0.0))
            throw input_error("permutation_invcov_exact: diagonal entry " + std::to_string(i) +
                              " is not positive");
    return (static_cast<double>(l) / static_cast<double>(n)) * d.cwiseInverse();
}

/// Brute-force average over all N!/(N-L)! permutation matrices; the oracle
/// for the closed form above. Guarded to N <= 8.
inline RealVector permutation_invcov_enumerate(const RealVector& d, Index l) {
    const Index n = d.size();
    if (n > 8)
        throw input_error("permutation_invcov_enumerate: N=" + std::to_string(n) +
                          " exceeds the factorial enumeration guard (8)");
    if (l < 1 || l > n) throw input_error("permutation_invcov_enumerate: need 1 <= L <= N");
    for (Index i = 0; i < n; ++i)
        if (!(d(i) > 0.0))
            throw input_error("permutation_invcov_enumerate: diagonal entry " +
                              std::to_string(i) + " is not positive");

    // Depth-first over ordered index tuples; each tuple is a permutation
    // matrix whose rows are the selected standard basis vectors. Long double
    // keeps the N!/(N-L)!-term accumulation well below the comparison noise.
    using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    LongMatrix acc = LongMatrix::Zero(n, n);
    std::vector<Index> tuple;
    std::vector<bool> used(n, false);
    std::size_t count = 0;
    std::function<void()> rec = [&]() {
        if (static_cast<Index>(tuple.size()) == l) {
            LongMatrix phi = LongMatrix::Zero(l, n);
            for (Index r = 0; r < l; ++r) phi(r, tuple[r]) = 1.0L;
            LongMatrix dl = LongMatrix::Zero(n, n);
            for (Index i = 0; i < n; ++i) dl(i, i) = static_cast<long double>(d(i));
            const LongMatrix reduced = phi * dl * phi.transpose();
            acc += phi.transpose() * reduced.inverse() * phi;
            ++count;
            return;
        }
        for (Index i = 0; i < n; ++i) {
            if (used[i]) continue;
            used[i] = true;
            tuple.push_back(i);
            rec();
            tuple.pop_back();
            used[i] = false;
        }
    };
    rec();
    acc /= static_cast<long double>(count);
    return acc.diagonal().cast<double>();
}

/// Mean of Tr((V*V)^{-1}) over N x L standard complex Gaussian matrices V.
/// Both trace conventions are reported: the unnormalized trace has exact
/// finite-size mean L/(N-L); dividing by L gives the normalized-trace value
/// used in the estimator MSE penalty.
struct WishartInvTrace {
    double trace_mean = 0.0;       // E[Tr((V*V)^{-1})]
    double trace_se = 0.0;
    double normalized_mean = 0.0;  // E[(1/L) Tr((V*V)^{-1})]
    double normalized_se = 0.0;
    std::size_t samples = 0;
};

inline WishartInvTrace mc_wishart_inv_trace(Index n, Index l, std::size_t s, const RngStream& rng,
                                            unsigned threads = 0) {
    if (l < 1 || l >= n)
        throw input_error("mc_wishart_inv_trace: need 1 <= L < N (expectation diverges at L=N)");
    const McEstimate est =
        detail::mc_matrix_mean(1, 1, s, rng, threads, [&](RngStream& sr, std::size_t idx) {
            ComplexMatrix v(n, l);
            for (Index j = 0; j < l; ++j)
                for (Index i = 0; i < n; ++i) v(i, j) = sr.cnormal();
            const ComplexMatrix gram = v.adjoint() * v;
            Eigen::LLT<ComplexMatrix> llt(gram);
            if (llt.info() != Eigen::Success)
                throw ensemble_error("mc_wishart_inv_trace: singular Gram matrix at draw " +
                                     std::to_string(idx));
            const double tr = llt.solve(ComplexMatrix::Identity(l, l)).trace().real();
            ComplexMatrix out(1, 1);
            out(0, 0) = tr;
            return out;
        });
    WishartInvTrace out;
    out.trace_mean = est.mean(0, 0).real();
    out.trace_se = est.std_error(0, 0);
    out.normalized_mean = out.trace_mean / static_cast<double>(l);
    out.normalized_se = out.trace_se / static_cast<double>(l);
    out.samples = est.samples;
    return out;
}

}  // namespace singcov
