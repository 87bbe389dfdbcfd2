#include <catch2/catch_amalgamated.hpp>
#include <singcov/applications.hpp>

using namespace singcov;

namespace {

ComplexMatrix random_complex(Index rows, Index cols, RngStream& rng) {
    ComplexMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.cnormal();
    return m;
}

ComplexVector random_unit(Index m, RngStream& rng) {
    ComplexVector a(m);
    for (Index i = 0; i < m; ++i) a(i) = rng.cnormal();
    return a / a.norm();
}

}  // namespace

TEST_CASE("householder complement") {
    // axis case: rows span e_2..e_M
    ComplexVector e1 = ComplexVector::Zero(4);
    e1(0) = 1.0;
    const SteeringContext axis = householder_complement(e1);
    for (Index r = 0; r < 3; ++r) CHECK(std::abs(axis.a_perp(r, 0)) <= 1e-14);

    RngStream rng(101, 0);
    for (Index m : {2, 5, 9}) {
        const ComplexVector a = random_unit(m, rng);
        const SteeringContext ctx = householder_complement(a);
        CHECK((ctx.a_perp * ctx.a).norm() <= 1e-12);
        CHECK((ctx.a_perp * ctx.a_perp.adjoint() - ComplexMatrix::Identity(m - 1, m - 1))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
        ComplexMatrix q(m, m);
        q.row(0) = ctx.a.adjoint();
        q.bottomRows(m - 1) = ctx.a_perp;
        CHECK((q * q.adjoint() - ComplexMatrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-12);
    }

    // non-unit input is normalized with a flag
    ComplexVector big = ComplexVector::Ones(3);
    const SteeringContext ctx = householder_complement(big);
    CHECK(ctx.was_normalized);
    CHECK(ctx.a.norm() == Catch::Approx(1.0));

    CHECK_THROWS_AS(householder_complement(ComplexVector::Zero(3)), input_error);
}

TEST_CASE("capon power on the identity covariance") {
    RngStream rng(102, 0);
    const Index m = 5;
    const HermitianMatrix k(ComplexMatrix(ComplexMatrix::Identity(m, m)));
    const ComplexVector a = random_unit(m, rng);
    EstimatorConfig cfg;
    // the correction vanishes because A_perp annihilates a
    CHECK(capon_power(k, a, 3, cfg) == Catch::Approx(1.0).epsilon(1e-10));
    CHECK(capon_conventional(k, a) == Catch::Approx(1.0));
    CHECK(capon_full(k, a) == Catch::Approx(1.0));
}

TEST_CASE("capon closed form equals the constrained-ensemble expectation") {
    RngStream rng(103, 0);
    const Index m = 6, n = 4, l = 3;
    const ComplexMatrix x = random_complex(m, n, rng);
    const HermitianMatrix k = sample_covariance(x);
    const ComplexVector a = random_unit(m, rng);
    EstimatorConfig cfg;

    const double closed = capon_power(k, a, l, cfg);

    // oracle: draw Theta, build Phi = [a*; Theta A_perp], average the
    // reduced MVDR power 1/[(Phi K Phi*)^{-1}]_{11} (Phi a = e_1)
    const SteeringContext ctx = householder_complement(a);
    const std::size_t s = 20000;
    double mean = 0.0, m2 = 0.0;
    const RngStream base(104, 0);
    for (std::size_t i = 0; i < s; ++i) {
        RngStream sr = base.substream(i);
        const ComplexMatrix theta = sample_haar(l - 1, m - 1, sr);
        ComplexMatrix phi(l, m);
        phi.row(0) = ctx.a.adjoint();
        phi.bottomRows(l - 1) = theta * ctx.a_perp;
        const ComplexMatrix red = phi * k.matrix() * phi.adjoint();
        const double p = 1.0 / red.inverse()(0, 0).real();
        const double delta = p - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (p - mean);
    }
    const double se = std::sqrt(m2 / (static_cast<double>(s) * (s - 1.0)));
    CHECK(std::abs(closed - mean) <= 5.0 * se);

    // upper bounded by the conventional estimate for PSD K
    CHECK(closed <= capon_conventional(k, a) + 1e-12);
}

TEST_CASE("capon rank preconditions") {
    RngStream rng(105, 0);
    const Index m = 6;
    const ComplexMatrix x = random_complex(m, 2, rng);  // rank 2
    const HermitianMatrix k = sample_covariance(x);
    const ComplexVector a = random_unit(m, rng);
    EstimatorConfig cfg;
    CHECK_THROWS_AS(capon_power(k, a, 5, cfg), input_error);  // L-1 above reduced rank
    CHECK_THROWS_AS(capon_power(k, a, 1, cfg), input_error);  // L < 2
    CHECK_THROWS_AS(capon_full(k, a), degeneracy_error);      // singular K
}

TEST_CASE("linear estimator: scalar case is least squares") {
    RngStream rng(106, 0);
    const Index n = 4;
    const ComplexMatrix x = random_complex(1, n, rng);
    const ComplexMatrix y = random_complex(1, n, rng);
    EstimatorConfig cfg;
    const LinearEstimator est = linear_train(x, y, 1, cfg);
    std::complex<double> num = 0.0;
    double den = 0.0;
    for (Index t = 0; t < n; ++t) {
        num += x(0, t) * std::conj(y(0, t));
        den += std::norm(y(0, t));
    }
    CHECK(std::abs(est.weight(0, 0) - num / den) <= 1e-12 * std::abs(num / den));
}

TEST_CASE("linear estimator apply is linear") {
    RngStream rng(107, 0);
    const ComplexMatrix x = random_complex(2, 6, rng);
    const ComplexMatrix y = random_complex(4, 6, rng);
    EstimatorConfig cfg;
    const LinearEstimator est = linear_train(x, y, 2, cfg);
    const ComplexVector y1 = random_complex(4, 1, rng);
    const ComplexVector y2 = random_complex(4, 1, rng);
    const std::complex<double> alpha(1.3, -0.4);
    const ComplexVector lhs = linear_apply(est, ComplexVector(alpha * y1 + y2));
    const ComplexVector rhs = alpha * linear_apply(est, y1) + linear_apply(est, y2);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());

    CHECK_THROWS_AS(linear_train(x, y, 7, cfg), input_error);
}

TEST_CASE("ensemble averaging beats a single projection (Jensen)") {
    // jointly Gaussian (x, y), y = x + noise; compare squared errors of the
    // ensemble-averaged estimator vs one using a single fixed frame
    RngStream rng(108, 0);
    const Index my = 6, n = 5, l = 2;
    const Index trials = 200;
    double err_ensemble = 0.0, err_single = 0.0;
    for (Index t = 0; t < trials; ++t) {
        RngStream tr = rng.substream(t);
        const ComplexMatrix coupling = random_complex(1, my, tr);
        ComplexMatrix ytrain = random_complex(my, n, tr);
        ComplexMatrix xtrain = coupling * ytrain;
        EstimatorConfig cfg;
        const LinearEstimator est = linear_train(xtrain, ytrain, l, cfg);

        const ComplexMatrix phi = sample_haar(l, my, tr);
        const ComplexMatrix red = phi * ytrain;
        const ComplexMatrix single_w = xtrain * red.adjoint() *
                                       (red * red.adjoint()).inverse() * phi;

        const ComplexVector ytest = random_complex(my, 1, tr);
        const std::complex<double> xtest = (coupling * ytest)(0);
        err_ensemble += std::norm(linear_apply(est, ytest)(0) - xtest);
        err_single += std::norm((single_w * ytest)(0) - xtest);
    }
    CHECK(err_ensemble < err_single);
}

TEST_CASE("mse penalty factor") {
    CHECK(mse_penalty(2 * 7, 7) == Catch::Approx(2.0));
    CHECK(mse_penalty(40, 10) == Catch::Approx(4.0 / 3.0));
    CHECK_THROWS_AS(mse_penalty(10, 10), degeneracy_error);

    // finite-size Monte Carlo value agrees with the formula
    const WishartInvTrace w = mc_wishart_inv_trace(40, 10, 20000, RngStream(109, 0));
    CHECK(std::abs((1.0 + w.trace_mean) - mse_penalty(40, 10)) <= 3.0 * w.trace_se + 1e-12);
}

TEST_CASE("classifier basics") {
    RngStream rng(110, 0);
    const ComplexMatrix x0 = random_complex(4, 6, rng);
    EstimatorConfig cfg;
    // identical training sets give the zero statistic
    const QuadraticClassifier same = classifier_train(x0, x0, 2, cfg);
    CHECK(same.q.cwiseAbs().maxCoeff() <= 1e-12);
    const ComplexVector probe = random_complex(4, 1, rng);
    CHECK(classify(same, probe).statistic == Catch::Approx(0.0).margin(1e-12));

    // Q is Hermitian, statistic is real by construction
    const ComplexMatrix x1 = random_complex(4, 6, rng);
    const QuadraticClassifier clf = classifier_train(x0, x1, 2, cfg);
    CHECK((clf.q - clf.q.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);

    ComplexMatrix wrong(3, 6);
    wrong.setZero();
    CHECK_THROWS_AS(classifier_train(x0, wrong, 2, cfg), input_error);
}

TEST_CASE("classifier separates scaled Gaussians") {
    // Sigma0 = I, Sigma1 = 4I, M=20, N=10, L=5: accuracy well above chance on
    // held-out data. The threshold is calibrated to the midpoint of the
    // training statistics; at gamma = 0 both classes sit on the same side
    // (the statistic is essentially (3/4) x* invcov(X0 X0*) x > 0), so the
    // zero threshold cannot split them regardless of estimator quality.
    RngStream rng(111, 0);
    const Index m = 20, n = 10, l = 5;
    const ComplexMatrix x0 = random_complex(m, n, rng);
    const ComplexMatrix x1 = 2.0 * random_complex(m, n, rng);
    EstimatorConfig cfg;
    QuadraticClassifier clf = classifier_train(x0, x1, l, cfg);

    double mean0 = 0.0, mean1 = 0.0;
    for (Index j = 0; j < n; ++j) {
        mean0 += classify(clf, x0.col(j)).statistic;
        mean1 += classify(clf, x1.col(j)).statistic;
    }
    clf.gamma = 0.5 * (mean0 + mean1) / static_cast<double>(n);

    Index correct = 0;
    const Index tests = 500;
    for (Index t = 0; t < tests; ++t) {
        const bool is_h1 = (t % 2 == 1);
        ComplexVector x = random_complex(m, 1, rng);
        if (is_h1) x *= 2.0;
        correct += classify(clf, x).hypothesis == (is_h1 ? 1 : 0);
    }
    CHECK(static_cast<double>(correct) / tests > 0.7);
}

TEST_CASE("classifier decisions invariant under covariance rescaling") {
    RngStream rng(112, 0);
    const Index m = 5, n = 4, l = 2;
    const ComplexMatrix x0 = random_complex(m, n, rng);
    const ComplexMatrix x1 = 1.7 * random_complex(m, n, rng);
    const double gamma = 0.05;
    EstimatorConfig cfg;
    const QuadraticClassifier base = classifier_train(x0, x1, l, cfg, gamma);
    const double c = 9.0;
    const QuadraticClassifier scaled = classifier_train(
        ComplexMatrix(std::sqrt(c) * x0), ComplexMatrix(std::sqrt(c) * x1), l, cfg, gamma / c);
    for (Index t = 0; t < 50; ++t) {
        const ComplexVector x = random_complex(m, 1, rng);
        CHECK(classify(base, x).hypothesis == classify(scaled, x).hypothesis);
    }
}

TEST_CASE("roc sweep is monotone in the threshold") {
    RngStream rng(113, 0);
    const Index m = 8, n = 6;
    const ComplexMatrix x0 = random_complex(m, n, rng);
    const ComplexMatrix x1 = 2.0 * random_complex(m, n, rng);
    EstimatorConfig cfg;
    const QuadraticClassifier clf = classifier_train(x0, x1, 3, cfg);
    const auto roc = classifier_roc(clf, random_complex(m, 40, rng),
                                    ComplexMatrix(2.0 * random_complex(m, 40, rng)));
    REQUIRE(!roc.empty());
    for (std::size_t i = 1; i < roc.size(); ++i) {
        CHECK(roc[i].gamma > roc[i - 1].gamma);
        CHECK(roc[i].true_positive_rate <= roc[i - 1].true_positive_rate);
        CHECK(roc[i].false_positive_rate <= roc[i - 1].false_positive_rate);
    }
}

TEST_CASE("single-frame conditional mse matches the product form") {
    // Fixed frame, known statistics: the empirical MSE of the plug-in
    // estimator built from fresh training data matches
    // [K_x - K_xy Phi*(Phi K_y Phi*)^{-1} Phi K_yx] * (1 + E Tr((V*V)^{-1})).
    // N and L are small enough to distinguish the unnormalized-trace penalty
    // 1 + L/(N-L) from the normalized variant.
    RngStream rng(114, 0);
    const Index my = 4, n = 6, l = 2;
    const ComplexMatrix coupling = random_complex(1, my, rng);

    // population statistics for y ~ CN(0, I), x = coupling y + noise
    const ComplexMatrix ky = ComplexMatrix::Identity(my, my);
    const ComplexMatrix kxy = coupling;  // E[x y*] = coupling K_y
    const double kx = coupling.squaredNorm() + 1.0;

    const ComplexMatrix phi = sample_haar(l, my, rng);
    const ComplexMatrix red = phi * ky * phi.adjoint();
    const double reduced_mmse =
        kx - (kxy * phi.adjoint() * red.inverse() * phi * kxy.adjoint())(0, 0).real();
    const double penalty = 1.0 + static_cast<double>(l) / static_cast<double>(n - l);

    const Index trials = 20000;
    double err = 0.0;
    for (Index t = 0; t < trials; ++t) {
        RngStream tr = rng.substream(t);
        ComplexMatrix ytrain(my, n), noise(1, n);
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < my; ++i) ytrain(i, j) = tr.cnormal();
            noise(0, j) = tr.cnormal();
        }
        const ComplexMatrix xtrain = coupling * ytrain + noise;
        const ComplexMatrix yred = phi * ytrain;
        const ComplexMatrix w =
            xtrain * yred.adjoint() * (yred * yred.adjoint()).inverse();
        ComplexVector ytest(my);
        for (Index i = 0; i < my; ++i) ytest(i) = tr.cnormal();
        const std::complex<double> xtest = (coupling * ytest)(0) + tr.cnormal();
        err += std::norm((w * phi * ytest)(0) - xtest);
    }
    err /= static_cast<double>(trials);
    CHECK(err == Catch::Approx(reduced_mmse * penalty).epsilon(0.08));
}
