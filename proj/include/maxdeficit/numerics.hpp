#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "maxdeficit/errors.hpp"

namespace maxdeficit {

struct Tolerance {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_iter = 200;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1) {
            throw ArgumentError("Tolerance requires abs_tol > 0, rel_tol > 0, max_iter >= 1");
        }
    }
};

/*
 * Brent's method on a bracket [lo, hi] with f(lo) * f(hi) <= 0.
 * Stops when |f(x)| <= abs_tol or the bracket half-width drops below
 * abs_tol + rel_tol * |x|.
 */
template <class F>
double brent_root(F&& f, double lo, double hi, const Tolerance& tol = {}) {
    tol.validate();
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (std::isnan(fa) || std::isnan(fb) || (fa > 0.0) == (fb > 0.0)) {
        throw BracketError("brent_root: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    }

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < tol.max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double xtol = 0.5 * (tol.abs_tol + tol.rel_tol * std::abs(b)) +
                            2.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= xtol || std::abs(fb) <= tol.abs_tol) return b;

        if (std::abs(e) >= xtol && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic interpolation, secant when only two points are distinct
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(xtol * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > xtol) ? d : (xm > 0.0 ? xtol : -xtol);
        fb = f(b);
        if (fb == 0.0) return b;
    }
    throw ConvergenceError("brent_root: max_iter exceeded");
}

/// Principal branch W0 of the Lambert W function, y >= -1/e.
inline double lambert_w0(double y) {
    constexpr double inv_e = 1.0 / std::numbers::e;
    if (std::isnan(y) || y < -inv_e) {
        throw DomainError("lambert_w0: argument below -1/e");
    }
    if (y == 0.0) return 0.0;
    if (y == -inv_e) return -1.0;
    if (std::isinf(y)) return y;

    double w;
    if (y < -0.25) {
        // branch-point series in p = sqrt(2(ey + 1))
        const double p = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * y + 1.0)));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else {
        w = std::log1p(y);
    }

    for (int iter = 0; iter < 100; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - y;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) break;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        w -= step;
        if (w < -1.0) w = -1.0;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
            break;
        }
    }
    return w;
}

namespace detail {

template <class F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole,
                       double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double h = b - a;
    const double left = h / 12.0 * (fa + 4.0 * flm + fm);
    const double right = h / 12.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * eps || lm == a || rm == b) {
        return left + right + diff / 15.0;
    }
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson on [a, b]; the error target is max(abs_eps, rel_eps * |coarse estimate|).
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_eps, double rel_eps,
                        int max_depth = 50) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // coarse 5-point pass to size the relative target when the 3-point rule is degenerate
    const double q1 = f(0.5 * (a + m));
    const double q3 = f(0.5 * (m + b));
    const double scale = std::max(std::abs(whole), (b - a) / 12.0 * std::abs(fa + 4.0 * q1 + 2.0 * fm + 4.0 * q3 + fb));
    const double eps = std::max(abs_eps, rel_eps * scale);
    return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

/*
 * Integral of a nonnegative, nonincreasing f over [a, inf).
 *
 * Panels [a, a+h], [a+h, a+3h], [a+3h, a+7h], ... double in width (h = 1).
 * Accumulation stops once a panel contributes no more than
 * max(abs_tol, rel_tol * total) and f at its right end is below the same
 * threshold. abs_tol is interpreted relative to the first panel's scale so
 * that very small integrals keep their relative accuracy.
 */
template <class F>
double tail_integral(F&& f, double a, const Tolerance& tol = {}) {
    tol.validate();
    double h = 1.0;
    double left = a;
    double total = 0.0;
    const double f0 = std::abs(f(a));
    const double floor = std::min(tol.abs_tol, tol.rel_tol * std::max(f0, std::numeric_limits<double>::min()));
    for (int panel = 0; panel < tol.max_iter; ++panel) {
        const double right = left + h;
        const double piece = adaptive_simpson(f, left, right, floor * 1e-2, tol.rel_tol * 1e-2);
        total += piece;
        const double threshold = std::max(floor, tol.rel_tol * std::abs(total));
        if (std::abs(piece) <= threshold && std::abs(f(right)) <= threshold) {
            return total;
        }
        left = right;
        h *= 2.0;
        if (!std::isfinite(left)) break;
    }
    throw TruncationError("tail_integral: no convergence within panel budget", total);
}

}  // namespace maxdeficit
