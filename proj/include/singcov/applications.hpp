#pragma once

#include <algorithm>
#include <vector>

#include "estimator.hpp"

namespace singcov {

/// Unit steering vector plus the (M-1) x M block completing it to a unitary:
/// rows of a_perp are orthonormal and annihilate a, so [a*; a_perp] is
/// unitary. Built from the Householder reflector sending a to an axis.
struct SteeringContext {
    ComplexVector a;
    ComplexMatrix a_perp;
    bool was_normalized = false;  // input norm differed from 1 and was fixed up
};

inline SteeringContext householder_complement(const ComplexVector& a_in) {
    const double norm = a_in.norm();
    if (!(norm > 0.0)) throw input_error("householder_complement: zero steering vector");
    SteeringContext ctx;
    ctx.was_normalized = std::abs(norm - 1.0) > 1e-10;
    ctx.a = a_in / norm;
    const Index m = ctx.a.size();
    if (m == 1) {
        ctx.a_perp.resize(0, 1);
        return ctx;
    }
    std::complex<double> phase = ctx.a(0);
    const double mag = std::abs(phase);
    phase = (mag > 0.0) ? phase / mag : std::complex<double>(1.0, 0.0);
    ComplexVector v = ctx.a;
    v(0) += phase;
    const ComplexMatrix h =
        ComplexMatrix::Identity(m, m) - (2.0 / v.squaredNorm()) * (v * v.adjoint());
    ctx.a_perp = h.bottomRows(m - 1);  // H a lies on the first axis, so these rows kill a
    return ctx;
}

/// Conventional power estimate a* K a.
inline double capon_conventional(const HermitianMatrix& k, const ComplexVector& a) {
    if (a.size() != k.dim()) throw input_error("capon_conventional: dimension mismatch");
    return (a.adjoint() * k.matrix() * a)(0).real();
}

/// Classical MVDR power 1/(a* K^{-1} a); requires invertible K.
inline double capon_full(const HermitianMatrix& k, const ComplexVector& a) {
    if (a.size() != k.dim()) throw input_error("capon_full: dimension mismatch");
    const Spectrum s = eig_hermitian(k);
    if (s.rank < k.dim())
        throw degeneracy_error("capon_full: K is singular (rank " + std::to_string(s.rank) +
                               " < " + std::to_string(k.dim()) + "); use the reduced estimate");
    const ComplexVector proj = s.eigvecs.adjoint() * a;
    double quad = 0.0;
    for (Index i = 0; i < k.dim(); ++i) quad += std::norm(proj(i)) / s.eigvals(i);
    return 1.0 / quad;
}

/// Reduced-dimension MVDR power, averaged over frames constrained to keep
/// the steering direction:
///   P = a* K a - a* K A_perp* invcov_{L-1}(A_perp K A_perp*) A_perp K a.
inline double capon_power(const HermitianMatrix& k, const ComplexVector& a, Index l,
                          const EstimatorConfig& cfg) {
    if (a.size() != k.dim()) throw input_error("capon_power: dimension mismatch");
    if (l < 2) throw input_error("capon_power: need L >= 2 (one row is pinned to the steering)");
    const SteeringContext ctx = householder_complement(a);
    const HermitianMatrix reduced(ctx.a_perp * k.matrix() * ctx.a_perp.adjoint());
    EstimatorConfig inner = cfg;
    inner.L = l - 1;
    const HermitianMatrix icov = invcov(reduced, inner);
    const ComplexVector proj = ctx.a_perp * (k.matrix() * ctx.a);
    const double correction = (proj.adjoint() * icov.matrix() * proj)(0).real();
    return capon_conventional(k, ctx.a) - correction;
}

/// Trained linear estimator x_hat(y) = X Y* invcov_L(Y Y*) y, the ensemble
/// average of the plug-in reduced-dimension MMSE estimator.
struct LinearEstimator {
    ComplexMatrix weight;  // M_x x M_y
    Index l_used = 0;
};

inline LinearEstimator linear_train(const ComplexMatrix& x, const ComplexMatrix& y, Index l,
                                    const EstimatorConfig& cfg) {
    check_finite(x, "linear_train");
    check_finite(y, "linear_train");
    if (x.cols() != y.cols())
        throw input_error("linear_train: X and Y must share the sample count");
    const Index n = y.cols();
    if (l < 1 || l > n)
        throw input_error("linear_train: L=" + std::to_string(l) + " exceeds N=" +
                          std::to_string(n));
    EstimatorConfig inner = cfg;
    inner.L = l;
    const HermitianMatrix yy(ComplexMatrix(y * y.adjoint()));
    LinearEstimator est;
    est.weight = x * y.adjoint() * invcov(yy, inner).matrix();
    est.l_used = l;
    return est;
}

inline ComplexVector linear_apply(const LinearEstimator& est, const ComplexVector& y) {
    if (y.size() != est.weight.cols()) throw input_error("linear_apply: dimension mismatch");
    return est.weight * y;
}

/// Asymptotic excess-MSE factor of the plug-in estimator: 1 + L/(N-L).
inline double mse_penalty(Index n, Index l) {
    if (l < 1 || l >= n) throw degeneracy_error("mse_penalty: need 1 <= L < N");
    return 1.0 + static_cast<double>(l) / static_cast<double>(n - l);
}

/// Naive-Bayes quadratic classifier: decide H1 when
/// -x* (invcov_L(X1 X1*) - invcov_L(X0 X0*)) x exceeds gamma.
struct QuadraticClassifier {
    ComplexMatrix q;  // Hermitian difference of the two inverse estimates
    double gamma = 0.0;
    Index l_used = 0;
};

inline QuadraticClassifier classifier_train(const ComplexMatrix& x0, const ComplexMatrix& x1,
                                            Index l, const EstimatorConfig& cfg,
                                            double gamma = 0.0) {
    check_finite(x0, "classifier_train");
    check_finite(x1, "classifier_train");
    if (x0.rows() != x1.rows())
        throw input_error("classifier_train: training sets have mismatched dimensions");
    if (l < 1 || l > x0.cols() || l > x1.cols())
        throw input_error("classifier_train: L exceeds a class sample count");
    EstimatorConfig inner = cfg;
    inner.L = l;
    const HermitianMatrix k0(ComplexMatrix(x0 * x0.adjoint()));
    const HermitianMatrix k1(ComplexMatrix(x1 * x1.adjoint()));
    QuadraticClassifier clf;
    clf.q = invcov(k1, inner).matrix() - invcov(k0, inner).matrix();
    clf.gamma = gamma;
    clf.l_used = l;
    return clf;
}

struct Classification {
    int hypothesis = 0;  // 0 or 1
    double statistic = 0.0;
};

inline Classification classify(const QuadraticClassifier& clf, const ComplexVector& x) {
    if (x.size() != clf.q.rows()) throw input_error("classify: dimension mismatch");
    Classification out;
    out.statistic = -(x.adjoint() * clf.q * x)(0).real();
    out.hypothesis = out.statistic > clf.gamma ? 1 : 0;
    return out;
}

struct RocPoint {
    double gamma = 0.0;
    double true_positive_rate = 0.0;
    double false_positive_rate = 0.0;
};

/// Threshold sweep over the pooled statistics of labeled test sets
/// (columns of test0 are H0 samples, columns of test1 are H1 samples).
inline std::vector<RocPoint> classifier_roc(const QuadraticClassifier& clf,
                                            const ComplexMatrix& test0,
                                            const ComplexMatrix& test1) {
    std::vector<double> s0(test0.cols()), s1(test1.cols());
    for (Index j = 0; j < test0.cols(); ++j) s0[j] = classify(clf, test0.col(j)).statistic;
    for (Index j = 0; j < test1.cols(); ++j) s1[j] = classify(clf, test1.col(j)).statistic;
    std::vector<double> thresholds;
    thresholds.insert(thresholds.end(), s0.begin(), s0.end());
    thresholds.insert(thresholds.end(), s1.begin(), s1.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::vector<RocPoint> roc;
    roc.reserve(thresholds.size());
    for (double g : thresholds) {
        RocPoint p;
        p.gamma = g;
        p.true_positive_rate =
            static_cast<double>(std::count_if(s1.begin(), s1.end(), [&](double v) { return v > g; })) /
            std::max<std::size_t>(s1.size(), 1);
        p.false_positive_rate =
            static_cast<double>(std::count_if(s0.begin(), s0.end(), [&](double v) { return v > g; })) /
            std::max<std::size_t>(s0.size(), 1);
        roc.push_back(p);
    }
    return roc;
}

}  // namespace singcov
