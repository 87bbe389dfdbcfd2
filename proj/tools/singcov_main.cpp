// Command-line front end for the singular-covariance estimators: estimate,
// capon, classify, linear, bench-eig, bench-lw, verify.
//
// Exit codes: 0 success, 1 input/validation error, 2 numerical degeneracy,
// 3 I/O failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <singcov/singcov.hpp>

namespace {

using namespace singcov;
using Clock = std::chrono::steady_clock;

Method parse_method(const std::string& name) {
    if (name == "auto") return Method::auto_dispatch;
    if (name == "exact") return Method::exact;
    if (name == "asymptotic") return Method::asymptotic;
    if (name == "mc" || name == "monte-carlo") return Method::monte_carlo;
    throw input_error("unknown method '" + name + "' (use exact|asymptotic|mc|auto)");
}

std::vector<Index> parse_sweep(const std::string& text) {
    std::vector<Index> out;
    const auto push_range = [&out](const std::string& part) {
        const std::size_t c1 = part.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stol(part));
            return;
        }
        const std::size_t c2 = part.find(':', c1 + 1);
        const long a = std::stol(part.substr(0, c1));
        const long b = std::stol(part.substr(c1 + 1, c2 == std::string::npos ? std::string::npos
                                                                             : c2 - c1 - 1));
        const long s = c2 == std::string::npos ? 1 : std::stol(part.substr(c2 + 1));
        if (s < 1) throw input_error("L sweep step must be >= 1");
        for (long v = a; v <= b; v += s) out.push_back(v);
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        push_range(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw input_error("empty L sweep");
    return out;
}

struct CommonFlags {
    std::string method = "auto";
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--method", method, "exact|asymptotic|mc|auto (default auto)");
        cmd->add_option("--samples", samples, "Monte Carlo sample count");
        cmd->add_option("--seed", seed, "RNG seed (determines all stochastic output)");
        cmd->add_option("--threads", threads, "worker cap (0: SINGCOV_THREADS or hardware)");
    }

    EstimatorConfig config(Index l) const {
        EstimatorConfig cfg;
        cfg.L = l;
        cfg.method = parse_method(method);
        cfg.samples = samples;
        cfg.seed = seed;
        cfg.threads = threads;
        return cfg;
    }
};

int cmd_estimate(const std::string& input, Index l, const CommonFlags& flags,
                 const std::string& out, bool inverse) {
    const HermitianMatrix k((load_matrix(input)));
    const EstimatorConfig cfg = flags.config(l);
    const auto t0 = Clock::now();
    const InvcovResult res = invcov_full(k, cfg);
    const double elapsed = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    ComplexMatrix output = res.matrix;
    if (inverse) {
        const RealVector inv = res.diag.full_diagonal(k.dim()).cwiseInverse();
        output = res.spectrum.eigvecs * inv.asDiagonal() * res.spectrum.eigvecs.adjoint();
    }

    nlohmann::json diag;
    diag["L"] = l;
    diag["method"] = method_name(res.diag.method_used);
    diag["rank"] = res.spectrum.rank;
    diag["lambda"] = std::vector<double>(res.diag.lambda.data(),
                                         res.diag.lambda.data() + res.diag.lambda.size());
    if (res.diag.mu) diag["mu"] = *res.diag.mu;
    if (res.diag.lambda_se)
        diag["lambda_se"] = std::vector<double>(
            res.diag.lambda_se->data(), res.diag.lambda_se->data() + res.diag.lambda_se->size());
    if (res.diag.mu_se) diag["mu_se"] = *res.diag.mu_se;
    diag["inverse"] = inverse;
    diag["elapsed_ms"] = elapsed;
    if (!res.note.empty()) diag["note"] = res.note;

    std::cout << (inverse ? "covariance estimate" : "inverse-covariance estimate")
              << ": M=" << k.dim() << " rank=" << res.spectrum.rank << " L=" << l
              << " method=" << method_name(res.diag.method_used) << " (" << elapsed << " ms)\n";
    if (!res.note.empty()) std::cout << "note: " << res.note << "\n";
    std::cout << "lambda: " << res.diag.lambda.transpose() << "\n";
    if (res.diag.mu) std::cout << "mu: " << *res.diag.mu << "\n";
    if (!out.empty()) {
        save_matrix_json(out, output, nlohmann::json{{"diagnostics", diag}});
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_capon(const std::string& input, const std::string& steering, Index l,
              const CommonFlags& flags) {
    const HermitianMatrix k((load_matrix(input)));
    const ComplexVector a = load_vector(steering);
    const SteeringContext ctx = householder_complement(a);
    if (ctx.was_normalized)
        std::cerr << "warning: steering vector normalized to unit length\n";
    std::cout << "conventional power: " << capon_conventional(k, ctx.a) << "\n";
    try {
        std::cout << "full MVDR power:    " << capon_full(k, ctx.a) << "\n";
    } catch (const degeneracy_error&) {
        std::cout << "full MVDR power:    n/a (K is singular)\n";
    }
    std::cout << "reduced power (L=" << l << "): " << capon_power(k, ctx.a, l, flags.config(l))
              << "\n";
    return 0;
}

int cmd_classify(const std::string& train0, const std::string& train1, Index l, double gamma,
                 const std::string& test, const CommonFlags& flags, const std::string& out) {
    const ComplexMatrix x0 = load_matrix(train0);
    const ComplexMatrix x1 = load_matrix(train1);
    const ComplexMatrix tx = load_matrix(test);
    const QuadraticClassifier clf = classifier_train(x0, x1, l, flags.config(l), gamma);
    std::string csv = "index,statistic,decision\n";
    Index h1 = 0;
    for (Index j = 0; j < tx.cols(); ++j) {
        const Classification c = classify(clf, tx.col(j));
        csv += std::to_string(j) + "," + singcov::detail::format_double(c.statistic) + "," +
               std::to_string(c.hypothesis) + "\n";
        h1 += c.hypothesis;
    }
    if (out.empty()) {
        std::cout << csv;
    } else {
        singcov::detail::atomic_write_text(out, csv);
        std::cout << "wrote " << out << "\n";
    }
    std::cout << "decided H1 for " << h1 << "/" << tx.cols() << " samples (gamma=" << gamma
              << ")\n";
    return 0;
}

int cmd_linear(const std::string& xfile, const std::string& yfile, Index l,
               const std::string& obsfile, const CommonFlags& flags, const std::string& out) {
    const ComplexMatrix x = load_matrix(xfile);
    const ComplexMatrix y = load_matrix(yfile);
    const ComplexVector obs = load_vector(obsfile);
    const LinearEstimator est = linear_train(x, y, l, flags.config(l));
    const ComplexVector xhat = linear_apply(est, obs);
    std::cout << "estimate:";
    for (Index i = 0; i < xhat.size(); ++i)
        std::cout << " " << xhat(i).real() << (xhat(i).imag() >= 0 ? "+" : "") << xhat(i).imag()
                  << "i";
    std::cout << "\n";
    if (l < y.cols())
        std::cout << "mse penalty factor (asymptotic): " << mse_penalty(y.cols(), l) << "\n";
    else
        std::cout << "mse penalty factor: n/a (L = N)\n";
    if (!out.empty()) {
        save_matrix_json(out, xhat,
                         nlohmann::json{{"penalty", l < y.cols() ? mse_penalty(y.cols(), l) : 0.0},
                                        {"L", l}});
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

struct BenchFlags {
    Index m = 60, n = 30;
    double beta = 10.0, alpha = 1.0;
    std::string sigma = "toeplitz";
    std::string sweep = "5:29:1";
    Index trials = 20;
    std::string metric = "mean-sq";
    std::string domain = "covariance";

    void attach(CLI::App* cmd) {
        cmd->add_option("--M", m, "ambient dimension");
        cmd->add_option("--N", n, "sample count");
        cmd->add_option("--beta", beta, "Toeplitz decay length");
        cmd->add_option("--alpha", alpha, "identity scale (with --sigma identity)");
        cmd->add_option("--sigma", sigma, "toeplitz|identity");
        cmd->add_option("--L-sweep", sweep, "L values, a:b:step or comma list");
        cmd->add_option("--trials", trials, "number of trials");
        cmd->add_option("--metric", metric, "mean-sq | standard");
        cmd->add_option("--domain", domain,
                        "covariance (score invcov^{-1} vs Sigma) | precision "
                        "(score invcov vs Sigma^{-1})");
    }

    ExperimentSpec spec(const CommonFlags& flags) const {
        ExperimentSpec s;
        s.m = m;
        s.n = n;
        if (sigma == "toeplitz")
            s.sigma_kind = ExperimentSpec::SigmaKind::toeplitz;
        else if (sigma == "identity")
            s.sigma_kind = ExperimentSpec::SigmaKind::scaled_identity;
        else
            throw input_error("unknown sigma kind '" + sigma + "'");
        s.beta = beta;
        s.alpha = alpha;
        s.l_sweep = parse_sweep(sweep);
        s.trials = trials;
        s.seed = flags.seed;
        if (metric == "mean-sq")
            s.metric = ExperimentSpec::Metric::mean_sq;
        else if (metric == "standard")
            s.metric = ExperimentSpec::Metric::standard;
        else
            throw input_error("unknown metric '" + metric + "'");
        if (domain == "covariance")
            s.domain = ExperimentSpec::Domain::covariance;
        else if (domain == "precision")
            s.domain = ExperimentSpec::Domain::precision;
        else
            throw input_error("unknown domain '" + domain + "'");
        s.estimator = flags.config(1);
        s.threads = flags.threads;
        return s;
    }
};

int cmd_bench_lw(const BenchFlags& bench, const CommonFlags& flags, const std::string& out) {
    const ExperimentSpec spec = bench.spec(flags);
    const SweepResult res = run_lw_compare(spec);
    const std::size_t rows = emit_plot_data(res, out);
    if (rows == 0) std::cerr << "warning: empty L sweep, wrote header-only CSV\n";
    std::cout << "LW baseline error: " << res.lw_mean << " (+- " << res.lw_stddev << " across "
              << res.trials << " trials)\n";
    std::size_t best = 0;
    for (std::size_t li = 0; li < res.l_values.size(); ++li) {
        std::cout << "L=" << res.l_values[li] << "  mean error " << res.mean_error[li] << " (+- "
                  << res.stddev_error[li] << ")" << (res.mean_error[li] < res.lw_mean ? "  < LW" : "")
                  << "\n";
        if (res.mean_error[li] < res.mean_error[best]) best = li;
    }
    if (!res.l_values.empty())
        std::cout << "best L: " << res.l_values[best] << " with mean error "
                  << res.mean_error[best] << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_bench_eig(const BenchFlags& bench, const CommonFlags& flags, const std::string& out) {
    const ExperimentSpec spec = bench.spec(flags);
    const EigCompareResult res = run_eig_compare(spec);
    emit_eig_data(res, out);
    double zero_frac = 0.0;
    for (std::size_t t = 0; t < res.sample.size(); ++t)
        zero_frac += static_cast<double>(spec.m - res.sample_rank[t]);
    zero_frac /= static_cast<double>(res.sample.size());
    std::cout << "truth eigenvalues in [" << res.truth.minCoeff() << ", " << res.truth.maxCoeff()
              << "]\n";
    std::cout << "sample covariance: " << zero_frac << " zero eigenvalues on average\n";
    for (std::size_t li = 0; li < res.l_values.size(); ++li) {
        double dev = 0.0;
        for (const auto& est : res.estimate[li])
            dev += (est - res.truth).cwiseAbs().maxCoeff();
        dev /= static_cast<double>(res.estimate[li].size());
        std::cout << "L=" << res.l_values[li] << "  mean max |eig deviation| " << dev << "\n";
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

// ----- verify: the module invariant suites -------------------------------


std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

struct VerifyReport {
    bool all_ok = true;

    void line(bool ok, const std::string& name, const std::string& detail) {
        std::cout << (ok ? "[pass] " : "[FAIL] ") << name << ": " << detail << "\n";
        all_ok = all_ok && ok;
    }
};

void verify_small_dimension(VerifyReport& rep, bool quick) {
    const int cases = quick ? 25 : 100;
    RngStream rng(2024, 1);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const double d1 = rng.uniform(0.2, 8.0);
        double d2 = rng.uniform(0.2, 8.0);
        if (std::abs(d1 - d2) < 1e-3) d2 += 0.1;
        RealVector d(2);
        d << d1, d2;
        const RealVector lam = lambda_exact(d, 1);
        const double mu = mu_exact(d, 1);
        const double den = (d1 - d2) * (d1 - d2);
        const double l1 = (d2 * std::log(d2) - d2 * std::log(d1) + d1 - d2) / den;
        const double l2 = (d1 * std::log(d1) - d1 * std::log(d2) + d2 - d1) / den;
        const double mu_ref = (std::log(d1) - std::log(d2)) / (d1 - d2);
        worst = std::max({worst, std::abs(lam(0) - l1) / std::abs(l1),
                          std::abs(lam(1) - l2) / std::abs(l2),
                          std::abs(mu - mu_ref) / std::abs(mu_ref)});
    }
    rep.line(worst <= 1e-10, "small-dimension closed forms",
             "max relative deviation " + sci(worst) + " over " + std::to_string(cases) + " spectra (tol 1e-10)");
}

void verify_functional_equation(VerifyReport& rep, bool quick) {
    const int cases = quick ? 12 : 50;
    RngStream rng(2024, 2);
    double worst_fe = 0.0, worst_tr = 0.0;
    for (int c = 0; c < cases; ++c) {
        const Index n = 2 + static_cast<Index>(rng.uniform(0.0, 6.999));
        RealVector d(n);
        for (Index i = 0; i < n; ++i) d(i) = rng.uniform(0.1, 10.0);
        for (Index l = 1; l < n; ++l) {
            const RealVector lam = lambda_exact(d, l);
            const RealVector lam_c = lambda_exact(RealVector(d.cwiseInverse()), n - l);
            const RealVector resid = d.cwiseProduct(lam) +
                                     d.cwiseInverse().cwiseProduct(lam_c) - RealVector::Ones(n);
            worst_fe = std::max(worst_fe, resid.cwiseAbs().maxCoeff());
            worst_tr = std::max(worst_tr, std::abs(d.dot(lam) - static_cast<double>(l)));
        }
    }
    rep.line(worst_fe <= 1e-9, "functional equation",
             "max residual " + sci(worst_fe) + " (tol 1e-9)");
    rep.line(worst_tr <= 1e-10, "trace identity",
             "max |Tr(D Lambda) - L| = " + sci(worst_tr) + " (tol 1e-10)");
}

void verify_mc_vs_exact(VerifyReport& rep, bool quick) {
    const std::size_t samples = quick ? 20000 : 100000;
    RealVector d(6);
    d << 4, 3, 2, 1, 0, 0;
    const DiagonalEstimate exact = invcov_diag_exact(d, 2);
    const McEstimate mc = mc_invcov(d, 2, samples, RngStream(2024, 3));
    const RealVector ref = exact.full_diagonal(6);
    double worst = 0.0;
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) {
            const double target = (i == j) ? ref(i) : 0.0;
            worst = std::max(worst, std::abs(mc.mean(i, j).real() - target) /
                                        std::max(mc.std_error(i, j), 1e-300));
        }
    rep.line(worst <= 5.0, "monte-carlo vs exact",
             "worst |z| = " + sci(worst) + " over all entries (tol 5 SE, S=" + std::to_string(samples) + ")");
}

void verify_permutation(VerifyReport& rep, bool quick) {
    const Index nmax = quick ? 5 : 6;
    double worst = 0.0;
    RngStream rng(2024, 4);
    for (Index n = 1; n <= nmax; ++n) {
        RealVector d(n);
        for (Index i = 0; i < n; ++i) d(i) = rng.uniform(0.2, 5.0);
        for (Index l = 1; l <= n; ++l) {
            const RealVector a = permutation_invcov_exact(d, l);
            const RealVector b = permutation_invcov_enumerate(d, l);
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        }
    }
    rep.line(worst <= 1e-14, "permutation ensemble",
             "closed form vs enumeration, max |diff| = " + sci(worst) + " (tol 1e-14)");
}

void verify_cov_identity(VerifyReport& rep, bool quick) {
    const std::size_t samples = quick ? 20000 : 100000;
    RngStream rng(2024, 5);
    ComplexMatrix g(4, 4);
    for (Index j = 0; j < 4; ++j)
        for (Index i = 0; i < 4; ++i) g(i, j) = rng.cnormal();
    const HermitianMatrix k((ComplexMatrix(g * g.adjoint())));
    const Spectrum s = eig_hermitian(k);
    const HermitianMatrix closed = cov_closed_form(k, 2, /*rescale=*/false);
    const ComplexMatrix closed_d = s.eigvecs.adjoint() * closed.matrix() * s.eigvecs;
    const McEstimate mc = mc_cov(s.eigvals, 2, samples, RngStream(2024, 6));
    double worst = 0.0;
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
            worst = std::max(worst, std::abs((mc.mean(i, j) - closed_d(i, j))) /
                                        std::max(mc.std_error(i, j), 1e-300));
    const double lm_err =
        (cov_closed_form(k, 4, false).matrix() - k.matrix()).cwiseAbs().maxCoeff();
    rep.line(worst <= 5.0 && lm_err == 0.0, "cov diagonal-loading identity",
             "worst |z| = " + sci(worst) + ", cov_M(K)=K deviation " + sci(lm_err));
}

int cmd_verify(bool quick) {
    VerifyReport rep;
    verify_small_dimension(rep, quick);
    verify_functional_equation(rep, quick);
    verify_mc_vs_exact(rep, quick);
    verify_permutation(rep, quick);
    verify_cov_identity(rep, quick);
    std::cout << (rep.all_ok ? "verify: all suites passed\n" : "verify: FAILURES present\n");
    return rep.all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"estimators for singular sample covariance matrices"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "inverse-covariance (or covariance) estimate");
    std::string est_input, est_out;
    Index est_l = 1;
    bool est_inverse = false;
    CommonFlags est_flags;
    est->add_option("--input", est_input, "matrix file (.json or .csv)")->required();
    est->add_option("--L", est_l, "projection dimension")->required();
    est->add_option("--out", est_out, "output JSON path");
    est->add_flag("--inverse", est_inverse, "write the inverse (covariance estimate)");
    est_flags.attach(est);

    // capon
    auto* cap = app.add_subcommand("capon", "reduced-dimension MVDR power estimate");
    std::string cap_input, cap_steering;
    Index cap_l = 2;
    CommonFlags cap_flags;
    cap->add_option("--input", cap_input, "covariance matrix file")->required();
    cap->add_option("--steering", cap_steering, "steering vector file")->required();
    cap->add_option("--L", cap_l, "projection dimension (>= 2)")->required();
    cap_flags.attach(cap);

    // classify
    auto* cls = app.add_subcommand("classify", "naive-Bayes quadratic classifier");
    std::string cls_t0, cls_t1, cls_test, cls_out;
    Index cls_l = 1;
    double cls_gamma = 0.0;
    CommonFlags cls_flags;
    cls->add_option("--train0", cls_t0, "H0 training matrix")->required();
    cls->add_option("--train1", cls_t1, "H1 training matrix")->required();
    cls->add_option("--L", cls_l, "projection dimension")->required();
    cls->add_option("--gamma", cls_gamma, "decision threshold");
    cls->add_option("--test", cls_test, "test matrix (columns are samples)")->required();
    cls->add_option("--out", cls_out, "CSV output path (default: stdout)");
    cls_flags.attach(cls);

    // linear
    auto* lin = app.add_subcommand("linear", "trained linear estimator");
    std::string lin_x, lin_y, lin_obs, lin_out;
    Index lin_l = 1;
    CommonFlags lin_flags;
    lin->add_option("--x", lin_x, "training X matrix")->required();
    lin->add_option("--y", lin_y, "training Y matrix")->required();
    lin->add_option("--L", lin_l, "projection dimension")->required();
    lin->add_option("--obs", lin_obs, "observation vector y")->required();
    lin->add_option("--out", lin_out, "output JSON path");
    lin_flags.attach(lin);

    // bench-eig / bench-lw
    auto* beig = app.add_subcommand("bench-eig", "eigenvalue recovery study");
    BenchFlags beig_bench;
    CommonFlags beig_flags;
    std::string beig_out = "bench_eig.csv";
    beig_bench.attach(beig);
    beig->add_option("--out", beig_out, "CSV output path");
    beig_flags.attach(beig);

    auto* blw = app.add_subcommand("bench-lw", "Ledoit-Wolf comparison sweep");
    BenchFlags blw_bench;
    CommonFlags blw_flags;
    std::string blw_out = "bench_lw.csv";
    blw_bench.attach(blw);
    blw->add_option("--out", blw_out, "CSV output path");
    blw_flags.attach(blw);

    // verify
    auto* ver = app.add_subcommand("verify", "run the invariant suites");
    bool ver_quick = false;
    ver->add_flag("--quick", ver_quick, "smaller sample counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (est->parsed()) return cmd_estimate(est_input, est_l, est_flags, est_out, est_inverse);
        if (cap->parsed()) return cmd_capon(cap_input, cap_steering, cap_l, cap_flags);
        if (cls->parsed())
            return cmd_classify(cls_t0, cls_t1, cls_l, cls_gamma, cls_test, cls_flags, cls_out);
        if (lin->parsed()) return cmd_linear(lin_x, lin_y, lin_l, lin_obs, lin_flags, lin_out);
        if (beig->parsed()) return cmd_bench_eig(beig_bench, beig_flags, beig_out);
        if (blw->parsed()) return cmd_bench_lw(blw_bench, blw_flags, blw_out);
        if (ver->parsed()) return cmd_verify(ver_quick);
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const degeneracy_error& e) {
        std::cerr << "degeneracy: " << e.what() << "\n";
        return 2;
    } catch (const ensemble_error& e) {
        std::cerr << "degeneracy: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
