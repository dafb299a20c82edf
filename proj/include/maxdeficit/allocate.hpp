#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "maxdeficit/distortion.hpp"
#include "maxdeficit/errors.hpp"
#include "maxdeficit/model.hpp"
#include "maxdeficit/numerics.hpp"

namespace maxdeficit {

/// A business line with its PH penalty exponent gamma >= 1 (distortion x^(1/gamma)).
struct AllocationLine {
    ExponentialLine line;
    double gamma = 1.0;
};

enum class AllocationMethod { MarginalSum, AggregateMin };

struct AllocationProblem {
    std::vector<AllocationLine> lines;
    double total_u = 0.0;
    AllocationMethod method = AllocationMethod::MarginalSum;
    Distortion aggregate_g = Distortion::identity();  ///< AggregateMin only

    void validate() const {
        if (lines.empty()) throw ArgumentError("allocation needs at least one line");
        if (!(total_u >= 0.0)) throw DomainError("total reserve must be >= 0");
        for (const auto& l : lines) {
            l.line.validate();
            if (!(l.gamma >= 1.0)) throw DomainError("distortion exponent gamma must be >= 1");
        }
    }
};

struct AllocationResult {
    std::vector<double> u_star;
    std::vector<std::size_t> active_set;
    double threshold = 0.0;  ///< equalised level (distorted ruin for Method 1, marginal reduction for Method 2)
    double objective = 0.0;
    double kkt_residual = 0.0;  ///< relative spread of the equalised quantity over the active set
    int iterations = 0;
};

// ---- Method 1: sum of marginal distorted deficits --------------------------

/// rho_1 = sum_k (gamma_k / b_k) a_k^(1/gamma_k) exp(-b_k u_k / gamma_k).
inline double rho1_exponential(std::span<const AllocationLine> lines, std::span<const double> u) {
    double acc = 0.0;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto rc = ruin_constants(lines[k].line);
        const double g = lines[k].gamma;
        acc += g / rc.b * std::pow(rc.a, 1.0 / g) * std::exp(-rc.b * u[k] / g);
    }
    return acc;
}

/*
 * Water-filling on the threshold lambda': every line with a distorted ruin
 * level above lambda' receives u_k = (gamma_k / b_k) ln(a_k^(1/gamma_k) / lambda').
 * The budget map is continuous and strictly decreasing; it is bisected in
 * log lambda' until the bracket collapses to machine precision.
 */
inline AllocationResult method1_exponential(const AllocationProblem& problem) {
    problem.validate();
    if (problem.method != AllocationMethod::MarginalSum) {
        throw ArgumentError("method1_exponential solves the marginal-sum problem");
    }
    const std::size_t K = problem.lines.size();
    std::vector<double> log_level(K), scale(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto rc = ruin_constants(problem.lines[k].line);
        const double g = problem.lines[k].gamma;
        log_level[k] = std::log(rc.a) / g;
        scale[k] = g / rc.b;
    }
    auto allocation_at = [&](double x, std::vector<double>& u) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            u[k] = std::max(0.0, scale[k] * (log_level[k] - x));
            sum += u[k];
        }
        return sum;
    };

    std::vector<double> u(K);
    double hi = *std::max_element(log_level.begin(), log_level.end());
    double lo = std::log(1e-14);
    while (allocation_at(lo, u) < problem.total_u) lo -= 32.0;

    int iterations = 0;
    double x = hi;
    if (problem.total_u > 0.0) {
        for (; iterations < 400; ++iterations) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (allocation_at(mid, u) > problem.total_u) lo = mid;
            else hi = mid;
        }
        // pick the bracket end whose budget is closer
        const double s_lo = allocation_at(lo, u);
        const double s_hi = allocation_at(hi, u);
        x = std::abs(s_lo - problem.total_u) < std::abs(s_hi - problem.total_u) ? lo : hi;
    }

    AllocationResult res;
    allocation_at(x, u);
    res.u_star = u;
    res.threshold = std::exp(x);
    res.iterations = iterations;
    for (std::size_t k = 0; k < K; ++k) {
        if (u[k] > 0.0) res.active_set.push_back(k);
    }
    if (res.active_set.empty()) {
        for (std::size_t k = 0; k < K; ++k) {
            if (log_level[k] == x) res.active_set.push_back(k);
        }
    }
    res.objective = rho1_exponential(problem.lines, res.u_star);
    return res;
}

/// Marginal level u -> g_k(psi_k(u)); strictly decreasing, continuous.
using MarginalLevel = std::function<double(double)>;

/*
 * Water-filling for arbitrary marginal levels. Each u_k(lambda') solves
 * level_k(u) = lambda' by Brent, clipped at 0.
 */
inline AllocationResult method1_generic(const std::vector<MarginalLevel>& levels, double total_u,
                                        const Tolerance& root_tol = {1e-15, 1e-13, 300}) {
    if (levels.empty()) throw ArgumentError("allocation needs at least one line");
    if (!(total_u >= 0.0)) throw DomainError("total reserve must be >= 0");
    const std::size_t K = levels.size();

    // monotonicity probe on a grid spanning the budget
    const double span = 2.0 * std::max(total_u, 1.0);
    for (std::size_t k = 0; k < K; ++k) {
        double prev = levels[k](0.0);
        if (!(prev >= 0.0 && prev <= 1.0)) throw ModelError("marginal level outside [0,1]");
        for (int i = 1; i <= 256; ++i) {
            const double cur = levels[k](span * i / 256.0);
            if (cur > prev * (1.0 + 1e-12) + 1e-15) {
                throw ModelError("marginal level is not nonincreasing for line " + std::to_string(k));
            }
            prev = cur;
        }
    }

    std::vector<double> level0(K);
    for (std::size_t k = 0; k < K; ++k) level0[k] = levels[k](0.0);

    auto reserve_for = [&](std::size_t k, double lam) {
        if (level0[k] <= lam) return 0.0;
        double lo = 0.0, hi = 1.0;
        int guard = 0;
        while (levels[k](hi) > lam) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 1100) throw ConvergenceError("method1_generic: level never reaches threshold");
        }
        return brent_root([&](double v) { return levels[k](v) - lam; }, lo, hi, root_tol);
    };
    auto allocation_at = [&](double x, std::vector<double>& u) {
        const double lam = std::exp(x);
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            u[k] = reserve_for(k, lam);
            sum += u[k];
        }
        return sum;
    };

    std::vector<double> u(K, 0.0);
    const double top = *std::max_element(level0.begin(), level0.end());
    if (!(top > 0.0)) throw ModelError("all marginal levels vanish at zero reserve");
    double hi = std::log(top);
    double lo = std::log(1e-14);
    int iterations = 0;
    double x = hi;
    if (total_u > 0.0) {
        while (allocation_at(lo, u) < total_u) {
            lo -= 32.0;
            if (lo < -700.0) throw ConvergenceError("method1_generic: budget exceeds reachable levels");
        }
        for (; iterations < 200; ++iterations) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (allocation_at(mid, u) > total_u) lo = mid;
            else hi = mid;
        }
        // interpolate between the bracketing allocations; exact on the budget and
        // splits a flat stretch of the levels (TVaR plateaus) instead of jumping over it
        std::vector<double> u_lo(K), u_hi(K);
        const double s_lo = allocation_at(lo, u_lo);
        const double s_hi = allocation_at(hi, u_hi);
        const double theta = s_lo > s_hi ? std::clamp((total_u - s_hi) / (s_lo - s_hi), 0.0, 1.0) : 0.0;
        for (std::size_t k = 0; k < K; ++k) u[k] = u_hi[k] + theta * (u_lo[k] - u_hi[k]);
        x = theta > 0.5 ? lo : hi;
    }

    AllocationResult res;
    res.u_star = u;
    res.threshold = std::exp(x);
    res.iterations = iterations;
    for (std::size_t k = 0; k < K; ++k) {
        if (u[k] > 0.0) res.active_set.push_back(k);
    }
    if (res.active_set.empty()) {
        for (std::size_t k = 0; k < K; ++k) {
            if (level0[k] == top) res.active_set.push_back(k);
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        res.objective += tail_integral(levels[k], u[k]);
    }
    return res;
}

/// Marginal levels g(psi_k(u)) for exponential lines under one distortion.
inline std::vector<MarginalLevel> exponential_levels(std::span<const ExponentialLine> lines,
                                                     const Distortion& g) {
    std::vector<MarginalLevel> out;
    for (const auto& l : lines) {
        const auto rc = ruin_constants(l);
        out.emplace_back([rc, g](double u) { return g.eval_clamped(ultimate_ruin(rc, u)); });
    }
    return out;
}

struct InvarianceReport {
    bool invariant = false;
    double max_deviation = 0.0;
    std::vector<double> distorted;
    std::vector<double> baseline;
};

namespace detail {

inline InvarianceReport compare_allocations(std::vector<double> distorted, std::vector<double> base,
                                            double tolerance) {
    InvarianceReport r;
    for (std::size_t k = 0; k < base.size(); ++k) {
        r.max_deviation = std::max(r.max_deviation, std::abs(distorted[k] - base[k]));
    }
    r.invariant = r.max_deviation <= tolerance;
    r.distorted = std::move(distorted);
    r.baseline = std::move(base);
    return r;
}

inline std::vector<double> undistorted_allocation(std::span<const ExponentialLine> lines, double total_u) {
    AllocationProblem p;
    for (const auto& l : lines) p.lines.push_back({l, 1.0});
    p.total_u = total_u;
    return method1_exponential(p).u_star;
}

}  // namespace detail

/// Method-1 allocation under one strictly increasing g applied to every line vs the undistorted one.
inline InvarianceReport invariance_check(std::span<const ExponentialLine> lines, const Distortion& g,
                                         double total_u, double tolerance = 1e-6) {
    const bool strictly_increasing = std::holds_alternative<IdentityDistortion>(g.variant()) ||
                                     std::holds_alternative<ProportionalHazard>(g.variant());
    if (!strictly_increasing) throw DomainError("invariance_check needs a strictly increasing distortion");
    auto distorted = method1_generic(exponential_levels(lines, g), total_u).u_star;
    return detail::compare_allocations(std::move(distorted), detail::undistorted_allocation(lines, total_u),
                                       tolerance);
}

/// Same comparison for line-specific exponents gamma_k.
inline InvarianceReport invariance_check(std::span<const AllocationLine> lines, double total_u,
                                         double tolerance = 1e-6) {
    AllocationProblem p{{lines.begin(), lines.end()}, total_u, AllocationMethod::MarginalSum,
                        Distortion::identity()};
    std::vector<ExponentialLine> plain;
    for (const auto& l : lines) plain.push_back(l.line);
    return detail::compare_allocations(method1_exponential(p).u_star,
                                       detail::undistorted_allocation(plain, total_u), tolerance);
}

// ---- Method 2: aggregate minimum reserve -----------------------------------

/// Ruin probability of the aggregate minimum at reserves u + v: 1 - prod_k (1 - psi_k(u_k + v)).
inline double psi_tilde(std::span<const RuinConstants> lines, std::span<const double> reserves, double v) {
    if (lines.size() != reserves.size()) throw ArgumentError("psi_tilde: size mismatch");
    if (!(v >= 0.0)) throw DomainError("psi_tilde: shift must be >= 0");
    // log-space product: 1 - prod(1 - psi) cancels badly once every psi is small
    double log_survive = 0.0;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        if (!(reserves[k] >= 0.0)) throw DomainError("psi_tilde: reserves must be >= 0");
        log_survive += std::log1p(-ultimate_ruin(lines[k], reserves[k] + v));
    }
    return -std::expm1(log_survive);
}

inline double rho1_two_line(const RuinConstants& A, const RuinConstants& B, double u1, double u2) {
    if (!(u1 >= 0.0) || !(u2 >= 0.0)) throw DomainError("reserves must be >= 0");
    return A.a / A.b * std::exp(-A.b * u1) + B.a / B.b * std::exp(-B.b * u2);
}

/// Identity-distortion rho_2 for two independent exponential lines.
inline double rho2_two_line(const RuinConstants& A, const RuinConstants& B, double u1, double u2) {
    return rho1_two_line(A, B, u1, u2) - A.a * B.a / (A.b + B.b) * std::exp(-A.b * u1 - B.b * u2);
}

namespace detail {

/// -d rho_2 / d u_k for the two-line identity case.
inline std::pair<double, double> marginal_reductions(const RuinConstants& A, const RuinConstants& B,
                                                     double u1, double u2) {
    const double p1 = ultimate_ruin(A, u1);
    const double p2 = ultimate_ruin(B, u2);
    const double s = A.b + B.b;
    return {p1 - A.b / s * p1 * p2, p2 - B.b / s * p1 * p2};
}

}  // namespace detail

/*
 * Two independent lines, identity aggregate distortion. The restriction of
 * rho_2 to u1 + u2 = u is convex, so h(u1) = r1 - r2 (difference of marginal
 * reductions) is nonincreasing. A strict sign at an end of [0, u] is a
 * corner; otherwise the interior condition
 *   psi_1 - psi_2 = ((b1 - b2)/(b1 + b2)) psi_1 psi_2
 * is solved by Brent on u1.
 */
inline AllocationResult method2_two_line(const RuinConstants& A, const RuinConstants& B, double total_u) {
    if (!(total_u >= 0.0)) throw DomainError("total reserve must be >= 0");
    auto h = [&](double u1) {
        const auto [r1, r2] = detail::marginal_reductions(A, B, u1, total_u - u1);
        return r1 - r2;
    };
    AllocationResult res;
    double u1 = 0.0;
    if (total_u > 0.0) {
        const double h0 = h(0.0);
        const double hu = h(total_u);
        if (h0 < 0.0) u1 = 0.0;
        else if (hu > 0.0) u1 = total_u;
        else u1 = brent_root(h, 0.0, total_u, Tolerance{1e-15, 1e-14, 300});
    }
    const double u2 = total_u - u1;
    res.u_star = {u1, u2};
    const auto [r1, r2] = detail::marginal_reductions(A, B, u1, u2);
    if (u1 > 0.0) res.active_set.push_back(0);
    if (u2 > 0.0) res.active_set.push_back(1);
    if (res.active_set.size() == 2) {
        res.threshold = 0.5 * (r1 + r2);
        res.kkt_residual = std::abs(r1 - r2) / res.threshold;
    } else if (res.active_set.empty()) {
        res.threshold = std::max(r1, r2);
    } else {
        res.threshold = res.active_set.front() == 0 ? r1 : r2;
    }
    res.objective = rho2_two_line(A, B, u1, u2);
    return res;
}

/// rho_2(u) = integral over v >= 0 of g(psi_tilde(u + v)).
namespace detail {

/// Shift v where psi~ drops to alpha under a TVaR distortion; 0 when it starts below.
/// On [0, v) the distorted probability is flat at 1 and its derivative vanishes.
inline double tvar_plateau_end(std::span<const RuinConstants> lines, const Distortion& g,
                               std::span<const double> u) {
    const auto* tv = std::get_if<TailValueAtRisk>(&g.variant());
    if (tv == nullptr) return 0.0;
    auto h = [&](double v) { return psi_tilde(lines, u, v) - tv->alpha; };
    if (h(0.0) <= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (h(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw ConvergenceError("psi~ never reaches the TVaR level");
    }
    return brent_root(h, lo, hi, Tolerance{1e-14, 1e-15, 300});
}

}  // namespace detail

inline double rho2(std::span<const RuinConstants> lines, const Distortion& g, std::span<const double> u,
                   const Tolerance& tol = {1e-12, 1e-12, 200}) {
    const double flat = detail::tvar_plateau_end(lines, g, u);
    return flat + tail_integral([&](double v) { return g.eval_clamped(psi_tilde(lines, u, v)); }, flat, tol);
}

/// Gradient of rho_2, differentiating under the integral: d/du_k = integral of g'(psi~) D_k psi~.
inline std::vector<double> rho2_gradient(std::span<const RuinConstants> lines, const Distortion& g,
                                         std::span<const double> u,
                                         const Tolerance& tol = {1e-12, 1e-12, 200}) {
    const std::size_t K = lines.size();
    std::vector<double> grad(K);
    const double flat = detail::tvar_plateau_end(lines, g, u);
    for (std::size_t k = 0; k < K; ++k) {
        auto integrand = [&](double v) {
            double log_others = 0.0;
            double psi_k = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                const double pj = ultimate_ruin(lines[j], u[j] + v);
                if (j == k) psi_k = pj;
                else log_others += std::log1p(-pj);
            }
            const double dpsi = lines[k].b * psi_k * std::exp(log_others);  // -D_k psi~
            if (dpsi == 0.0) return 0.0;
            return g.derivative(-std::expm1(log_others + std::log1p(-psi_k))) * dpsi;
        };
        grad[k] = -tail_integral(integrand, flat, tol);
    }
    return grad;
}

/// Euclidean projection onto {x >= 0, sum x = total}.
inline std::vector<double> project_simplex(std::span<const double> v, double total) {
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double t = (cumulative - total) / static_cast<double>(i + 1);
        if (sorted[i] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
    return out;
}

struct ProjectedGradientOptions {
    double tol = 1e-10;  ///< stop when ||u - P(u - grad)|| <= tol
    int max_iter = 5000;
    double kkt_rel_tol = 1e-4;
};

/*
 * Minimises rho_2 over the simplex by projected gradient descent.
 * Steps start from the Barzilai-Borwein estimate and backtrack until the
 * local curvature test (g1 - g0).(u1 - u0) <= ||u1 - u0||^2 / s passes.
 *
 * KKT certificate: with r_k = -d rho_2 / d u_k the marginal reduction, the
 * active lines share one value r and inactive lines satisfy r_k <= r.
 */
inline AllocationResult method2_generic(std::span<const ExponentialLine> lines, const Distortion& g,
                                        double total_u, const ProjectedGradientOptions& opt = {}) {
    if (lines.empty()) throw ArgumentError("allocation needs at least one line");
    if (!g.concave()) throw DomainError("method2_generic requires a concave aggregate distortion");
    if (!(total_u >= 0.0)) throw DomainError("total reserve must be >= 0");
    const std::size_t K = lines.size();
    std::vector<RuinConstants> rc;
    for (const auto& l : lines) rc.push_back(ruin_constants(l));

    AllocationResult res;
    std::vector<double> u(K, total_u / static_cast<double>(K));
    auto dot = [](std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
    };
    auto mapping_norm = [&](std::span<const double> x, std::span<const double> gr) {
        std::vector<double> step(K);
        for (std::size_t i = 0; i < K; ++i) step[i] = x[i] - gr[i];
        const auto p = project_simplex(step, total_u);
        double s = 0.0;
        for (std::size_t i = 0; i < K; ++i) s += (x[i] - p[i]) * (x[i] - p[i]);
        return std::sqrt(s);
    };

    if (K > 1 && total_u > 0.0) {
        std::vector<double> grad = rho2_gradient(rc, g, u);
        double step = 1.0;
        int it = 0;
        for (; it < opt.max_iter; ++it) {
            if (mapping_norm(u, grad) <= opt.tol) break;
            std::vector<double> trial_point(K), next, next_grad, du(K), dg(K);
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                for (std::size_t i = 0; i < K; ++i) trial_point[i] = u[i] - step * grad[i];
                next = project_simplex(trial_point, total_u);
                for (std::size_t i = 0; i < K; ++i) du[i] = next[i] - u[i];
                const double du2 = dot(du, du);
                if (du2 == 0.0) {
                    accepted = true;
                    next_grad = grad;
                    break;
                }
                next_grad = rho2_gradient(rc, g, next);
                for (std::size_t i = 0; i < K; ++i) dg[i] = next_grad[i] - grad[i];
                if (dot(dg, du) <= du2 / step) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) throw ConvergenceError("method2_generic: line search failed");
            const double curvature = dot(dg, du);
            const double du2 = dot(du, du);
            u = std::move(next);
            grad = std::move(next_grad);
            if (du2 == 0.0) break;
            // Barzilai-Borwein proposal for the next step
            step = curvature > 0.0 ? std::clamp(du2 / curvature, 1e-6, 1e12) : step * 2.0;
        }
        if (it >= opt.max_iter) throw ConvergenceError("method2_generic: max_iter exceeded");
        res.iterations = it;
    }

    res.u_star = u;
    const auto grad = rho2_gradient(rc, g, u);
    const double eps = 1e-9 * std::max(total_u, 1.0);
    for (std::size_t k = 0; k < K; ++k) {
        if (u[k] > eps) res.active_set.push_back(k);
    }
    if (!res.active_set.empty()) {
        double sum = 0.0;
        for (auto k : res.active_set) sum += -grad[k];
        res.threshold = sum / static_cast<double>(res.active_set.size());
        for (auto k : res.active_set) {
            res.kkt_residual = std::max(res.kkt_residual, std::abs(-grad[k] - res.threshold) / res.threshold);
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (u[k] <= eps && -grad[k] > res.threshold * (1.0 + opt.kkt_rel_tol)) {
                res.kkt_residual = std::max(res.kkt_residual, (-grad[k] - res.threshold) / res.threshold);
            }
        }
    } else {
        for (std::size_t k = 0; k < K; ++k) res.threshold = std::max(res.threshold, -grad[k]);
    }
    res.objective = rho2(rc, g, u);
    return res;
}

}  // namespace maxdeficit
