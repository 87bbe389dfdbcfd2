#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace singcov {

/// Function of the form  sum_m a_m x^m  +  sum_m b_m x^m log(x),  x > 0.
/// This family is closed under the normalized antiderivative operator
/// integrate_op below, which is what the closed-form trace averages need.
template <typename Real>
struct BasicLogPoly {
    std::vector<Real> poly;      // poly[m] multiplies x^m
    std::vector<Real> logpoly;   // logpoly[m] multiplies x^m log x

    static BasicLogPoly monomial(std::size_t n, Real c = Real(1)) {
        BasicLogPoly p;
        p.poly.assign(n + 1, Real(0));
        p.poly[n] = c;
        return p;
    }

    static BasicLogPoly log_x(Real c = Real(1)) {
        BasicLogPoly p;
        p.logpoly.assign(1, c);
        return p;
    }

    bool empty() const { return poly.empty() && logpoly.empty(); }

    /// Multiply by x^j (shift all degrees up).
    BasicLogPoly shifted(std::size_t j) const {
        BasicLogPoly out;
        if (!poly.empty()) {
            out.poly.assign(poly.size() + j, Real(0));
            for (std::size_t m = 0; m < poly.size(); ++m) out.poly[m + j] = poly[m];
        }
        if (!logpoly.empty()) {
            out.logpoly.assign(logpoly.size() + j, Real(0));
            for (std::size_t m = 0; m < logpoly.size(); ++m) out.logpoly[m + j] = logpoly[m];
        }
        return out;
    }

    /// One antiderivative step with zero integration constant:
    ///   x^m            ->  x^{m+1} / (m+1)
    ///   x^m log x      ->  x^{m+1} log x / (m+1)  -  x^{m+1} / (m+1)^2
    BasicLogPoly integrated_once() const {
        BasicLogPoly out;
        const std::size_t np = poly.size();
        const std::size_t nl = logpoly.size();
        out.poly.assign(std::max(np, nl) + 1, Real(0));
        if (nl > 0) out.logpoly.assign(nl + 1, Real(0));
        for (std::size_t m = 0; m < np; ++m) out.poly[m + 1] += poly[m] / Real(m + 1);
        for (std::size_t m = 0; m < nl; ++m) {
            const Real q = Real(m + 1);
            out.logpoly[m + 1] += logpoly[m] / q;
            out.poly[m + 1] -= logpoly[m] / (q * q);
        }
        return out;
    }

    BasicLogPoly integrated(std::size_t p) const {
        BasicLogPoly out = *this;
        for (std::size_t i = 0; i < p; ++i) out = out.integrated_once();
        return out;
    }

    Real eval(Real x) const {
        Real acc = horner(poly, x);
        if (!logpoly.empty()) {
            using std::log;
            acc += horner(logpoly, x) * log(x);
        }
        return acc;
    }

    /// d/dx of the function; evaluated pointwise so the x^{-1} term arising
    /// from a bare log x stays representable.
    Real eval_derivative(Real x) const {
        using std::log;
        Real acc = Real(0);
        for (std::size_t m = 1; m < poly.size(); ++m)
            acc += Real(m) * poly[m] * pow_int(x, m - 1);
        if (!logpoly.empty()) {
            const Real lx = log(x);
            for (std::size_t m = 0; m < logpoly.size(); ++m) {
                if (m == 0)
                    acc += logpoly[0] / x;
                else
                    acc += logpoly[m] * pow_int(x, m - 1) * (Real(m) * lx + Real(1));
            }
        }
        return acc;
    }

private:
    static Real horner(const std::vector<Real>& c, Real x) {
        Real acc = Real(0);
        for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
        return acc;
    }

    static Real pow_int(Real x, std::size_t n) {
        Real acc = Real(1);
        for (std::size_t i = 0; i < n; ++i) acc *= x;
        return acc;
    }
};

using LogPoly = BasicLogPoly<double>;

/// p-fold normalized antiderivative: I^(p)(x^n) = x^{n+p} / ((n+1)...(n+p)),
/// extended to the log terms by iterating the classical antiderivative with
/// zero constants (the continuous extension of the monomial rule).
inline LogPoly integrate_op(const LogPoly& g, std::size_t p) { return g.integrated(p); }

}  // namespace singcov
