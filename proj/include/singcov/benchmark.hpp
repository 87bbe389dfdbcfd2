#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "estimator.hpp"

namespace singcov {

/// One simulation study: draw N complex Gaussian samples with covariance
/// Sigma, form the sample covariance, and score estimators against Sigma.
struct ExperimentSpec {
    Index m = 60;
    Index n = 30;
    enum class SigmaKind { toeplitz, scaled_identity } sigma_kind = SigmaKind::toeplitz;
    double beta = 10.0;   // Toeplitz decay length
    double alpha = 1.0;   // identity scale
    std::vector<Index> l_sweep;
    Index trials = 20;
    std::uint64_t seed = 0;
    enum class Metric { mean_sq, standard } metric = Metric::mean_sq;
    // Error domain for the sweep: score the covariance estimate
    // invcov_L(K)^{-1} against Sigma, or the precision estimate invcov_L(K)
    // against Sigma^{-1}. The covariance-domain curve is monotone in L (the
    // top eigenvalue only deflates as L grows); the interior optimum-L
    // structure lives in the precision domain.
    enum class Domain { covariance, precision } domain = Domain::covariance;
    EstimatorConfig estimator;  // L is taken from the sweep
    unsigned threads = 0;

    void validate() const {
        if (m < 2 || n < 1) throw input_error("ExperimentSpec: need M >= 2, N >= 1");
        if (trials < 1) throw input_error("ExperimentSpec: need at least one trial");
        for (Index l : l_sweep)
            if (l < 1 || l > n)
                throw input_error("ExperimentSpec: sweep value L=" + std::to_string(l) +
                                  " outside [1, N=" + std::to_string(n) + "]");
    }
};

inline HermitianMatrix make_sigma(const ExperimentSpec& spec) {
    if (spec.sigma_kind == ExperimentSpec::SigmaKind::toeplitz)
        return toeplitz_exp(spec.m, spec.beta);
    if (!(spec.alpha > 0.0)) throw input_error("make_sigma: alpha must be positive");
    return HermitianMatrix(ComplexMatrix(spec.alpha * ComplexMatrix::Identity(spec.m, spec.m)));
}

/// N columns of CN(0, Sigma) via Cholesky coloring of CN(0, I) draws.
inline ComplexMatrix sample_gaussian_data(const HermitianMatrix& sigma, Index n, RngStream& rng) {
    Eigen::LLT<ComplexMatrix> llt(sigma.matrix());
    if (llt.info() != Eigen::Success)
        throw input_error("sample_gaussian_data: Sigma is not positive definite");
    const Index m = sigma.dim();
    ComplexMatrix z(m, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) z(i, j) = rng.cnormal();
    return ComplexMatrix(llt.matrixL()) * z;
}

inline double error_metric(const ExperimentSpec& spec, const ComplexMatrix& diff) {
    return spec.metric == ExperimentSpec::Metric::mean_sq ? frobenius_mean_sq(diff)
                                                          : frobenius_norm(diff);
}

/// Ledoit-Wolf shrinkage toward a scaled identity (Ledoit & Wolf 2004),
/// adapted to zero-mean complex data with K = (1/N) X X*: the shrinkage
/// intensity is the clipped ratio of the estimated estimation variance to
/// the dispersion of K around its trace-matched identity target.
inline HermitianMatrix ledoit_wolf(const ComplexMatrix& x) {
    check_finite(x, "ledoit_wolf");
    const Index m = x.rows(), n = x.cols();
    if (n < 2) throw input_error("ledoit_wolf: need N >= 2 samples");
    if (x.cwiseAbs().maxCoeff() == 0.0) throw input_error("ledoit_wolf: all-zero data");
    const ComplexMatrix s = (x * x.adjoint()) / static_cast<double>(n);
    const double md = static_cast<double>(m), nd = static_cast<double>(n);
    const double nu = s.trace().real() / md;
    const double d2 = (s - nu * ComplexMatrix::Identity(m, m)).squaredNorm() / md;
    double bbar2 = 0.0;
    for (Index t = 0; t < n; ++t) {
        const ComplexVector xt = x.col(t);
        bbar2 += (xt * xt.adjoint() - s).squaredNorm() / md;
    }
    bbar2 /= nd * nd;
    double rho = 0.0;
    if (d2 > 1e-300) rho = std::clamp(std::min(bbar2, d2) / d2, 0.0, 1.0);
    const ComplexMatrix out =
        rho * nu * ComplexMatrix::Identity(m, m) + (1.0 - rho) * s;
    return HermitianMatrix(out);
}

/// Frobenius-error sweep of the inverse-of-invcov covariance estimate over L,
/// against the Ledoit-Wolf baseline. Deterministic given (spec, seed).
struct SweepResult {
    std::vector<Index> l_values;
    std::vector<std::vector<double>> trial_errors;  // [l_index][trial]
    std::vector<double> mean_error;                 // per L
    std::vector<double> stddev_error;               // per L, across trials
    std::vector<double> lw_trial_errors;
    double lw_mean = 0.0;
    double lw_stddev = 0.0;
    Index trials = 0;
};

namespace detail {

inline std::pair<double, double> mean_stddev(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var)};
}

}  // namespace detail

inline SweepResult run_lw_compare(const ExperimentSpec& spec) {
    spec.validate();
    const HermitianMatrix sigma = make_sigma(spec);
    const bool precision = spec.domain == ExperimentSpec::Domain::precision;
    const ComplexMatrix target =
        precision ? ComplexMatrix(sigma.matrix().inverse()) : sigma.matrix();
    SweepResult res;
    res.l_values = spec.l_sweep;
    res.trials = spec.trials;
    res.trial_errors.assign(spec.l_sweep.size(), std::vector<double>(spec.trials, 0.0));
    res.lw_trial_errors.assign(spec.trials, 0.0);

    const RngStream base(spec.seed, 0);
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    run_chunks(spec.trials, resolve_thread_count(spec.threads), [&](std::size_t t) {
        if (failed.load()) return;
        try {
            RngStream rng = base.substream(t);
            const ComplexMatrix x = sample_gaussian_data(sigma, spec.n, rng);
            const HermitianMatrix k = sample_covariance(x);
            const ComplexMatrix lw = ledoit_wolf(x).matrix();
            res.lw_trial_errors[t] =
                error_metric(spec, target - (precision ? ComplexMatrix(lw.inverse()) : lw));
            const Spectrum s = eig_hermitian(k);
            for (std::size_t li = 0; li < spec.l_sweep.size(); ++li) {
                EstimatorConfig cfg = spec.estimator;
                cfg.L = spec.l_sweep[li];
                cfg.seed = spec.seed;
                const DiagonalEstimate diag = invcov_diag_dispatch(s.eigvals, s.rank, cfg);
                RealVector vals = diag.full_diagonal(spec.m);
                if (!precision) vals = vals.cwiseInverse();
                const ComplexMatrix est = s.eigvecs * vals.asDiagonal() * s.eigvecs.adjoint();
                res.trial_errors[li][t] = error_metric(spec, target - est);
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);

    res.mean_error.resize(spec.l_sweep.size());
    res.stddev_error.resize(spec.l_sweep.size());
    for (std::size_t li = 0; li < spec.l_sweep.size(); ++li) {
        const auto [mean, sd] = detail::mean_stddev(res.trial_errors[li]);
        res.mean_error[li] = mean;
        res.stddev_error[li] = sd;
    }
    const auto [lw_mean, lw_sd] = detail::mean_stddev(res.lw_trial_errors);
    res.lw_mean = lw_mean;
    res.lw_stddev = lw_sd;
    return res;
}

/// Eigenvalue recovery study: spectra of Sigma, of the sample covariance,
/// and of invcov_L(K)^{-1}, per trial and per L (all descending).
struct EigCompareResult {
    RealVector truth;
    std::vector<RealVector> sample;                 // [trial]
    std::vector<std::vector<RealVector>> estimate;  // [l_index][trial]
    std::vector<Index> l_values;
    std::vector<Index> sample_rank;                 // numerical rank of K per trial
};

inline EigCompareResult run_eig_compare(const ExperimentSpec& spec) {
    spec.validate();
    const HermitianMatrix sigma = make_sigma(spec);
    EigCompareResult res;
    res.l_values = spec.l_sweep;
    res.truth = eig_hermitian(sigma).eigvals;
    res.sample.resize(spec.trials);
    res.sample_rank.resize(spec.trials);
    res.estimate.assign(spec.l_sweep.size(), std::vector<RealVector>(spec.trials));

    const RngStream base(spec.seed, 0);
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    run_chunks(spec.trials, resolve_thread_count(spec.threads), [&](std::size_t t) {
        if (failed.load()) return;
        try {
            RngStream rng = base.substream(t);
            const ComplexMatrix x = sample_gaussian_data(sigma, spec.n, rng);
            const Spectrum s = eig_hermitian(sample_covariance(x));
            res.sample[t] = s.eigvals;
            res.sample_rank[t] = s.rank;
            for (std::size_t li = 0; li < spec.l_sweep.size(); ++li) {
                EstimatorConfig cfg = spec.estimator;
                cfg.L = spec.l_sweep[li];
                cfg.seed = spec.seed;
                RealVector inv;
                if (cfg.L == s.rank && s.rank < spec.m) {
                    // degenerate corner: mu is infinite at L = rank, so the
                    // inverse estimate keeps the raw spectrum (zero block -> 0)
                    inv = RealVector::Zero(spec.m);
                    inv.head(s.rank) = s.eigvals.head(s.rank);
                } else {
                    const DiagonalEstimate diag = invcov_diag_dispatch(s.eigvals, s.rank, cfg);
                    inv = diag.full_diagonal(spec.m).cwiseInverse();
                }
                std::sort(inv.data(), inv.data() + inv.size(), std::greater<double>());
                res.estimate[li][t] = inv;
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return res;
}

namespace detail {

inline void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path().empty()
                             ? fs::path(target.string() + ".tmp")
                             : target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw io_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV schema: L,trial,error,estimator. One data row per (L, trial) for the
/// invcov sweep, then one summary row per L (trial = -1, mean error), then a
/// single Ledoit-Wolf baseline row (L = -1, trial = -1). Returns the number
/// of data rows; an empty sweep produces a header-only file.
inline std::size_t emit_plot_data(const SweepResult& res, const std::string& path) {
    std::string csv = "L,trial,error,estimator\n";
    std::size_t rows = 0;
    for (std::size_t li = 0; li < res.l_values.size(); ++li)
        for (Index t = 0; t < res.trials; ++t) {
            csv += std::to_string(res.l_values[li]) + "," + std::to_string(t) + "," +
                   detail::format_double(res.trial_errors[li][t]) + ",invcov\n";
            ++rows;
        }
    for (std::size_t li = 0; li < res.l_values.size(); ++li)
        csv += std::to_string(res.l_values[li]) + ",-1," +
               detail::format_double(res.mean_error[li]) + ",invcov\n";
    if (res.trials > 0 && !res.lw_trial_errors.empty())
        csv += "-1,-1," + detail::format_double(res.lw_mean) + ",lw\n";
    detail::atomic_write_text(path, csv);
    return rows;
}

/// CSV schema: L,trial,estimator,index,value with estimator in
/// {truth, raw, invcov}; truth rows use L = -1, trial = -1 and raw rows
/// (sample-covariance eigenvalues) use L = -1.
inline std::size_t emit_eig_data(const EigCompareResult& res, const std::string& path) {
    std::string csv = "L,trial,estimator,index,value\n";
    std::size_t rows = 0;
    for (Index i = 0; i < res.truth.size(); ++i, ++rows)
        csv += "-1,-1,truth," + std::to_string(i) + "," + detail::format_double(res.truth(i)) +
               "\n";
    for (std::size_t t = 0; t < res.sample.size(); ++t)
        for (Index i = 0; i < res.sample[t].size(); ++i, ++rows)
            csv += "-1," + std::to_string(t) + ",raw," + std::to_string(i) + "," +
                   detail::format_double(res.sample[t](i)) + "\n";
    for (std::size_t li = 0; li < res.l_values.size(); ++li)
        for (std::size_t t = 0; t < res.estimate[li].size(); ++t)
            for (Index i = 0; i < res.estimate[li][t].size(); ++i, ++rows)
                csv += std::to_string(res.l_values[li]) + "," + std::to_string(t) + ",invcov," +
                       std::to_string(i) + "," + detail::format_double(res.estimate[li][t](i)) +
                       "\n";
    detail::atomic_write_text(path, csv);
    return rows;
}

}  // namespace singcov
