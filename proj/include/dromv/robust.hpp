#pragma once

#include <algorithm>
#include <utility>

#include "dromv/divergence.hpp"
#include "dromv/optimize.hpp"

namespace dromv {

/// Adversarial inner solution at a fixed decision: the worst-case value of
/// the penalized objective and the reweighting q attaining it.
struct WorstCase {
    double value = 0.0;
    Vector weights;
    double c = 0.0;  // minimizer of the scalar dual problem
};

/// Solution of the robust problem: decision, dual scalar, the worst-case
/// objective value and solver diagnostics. At delta = 0 the dual scalar is
/// set to minus the empirical mean reward by convention.
struct RobustSolution {
    Vector x;
    double c = 0.0;
    double delta = 0.0;
    double objective = 0.0;
    int iterations = 0;
    double residual = kInf;
};

enum class RobustMethod {
    Auto,          // closed form for relative entropy, dual otherwise
    Dual,          // generic scalar-dual path, any divergence
    ClosedFormKL,  // exponential-tilt closed form, relative entropy only
};

namespace detail {

// Exponential-tilt closed form for relative entropy:
//   value = -(1/delta) log sum_i p_i exp(-delta f_i),  q_i ~ p_i exp(-delta f_i),
// computed with max-subtraction so no intermediate overflows.
inline WorstCase worst_case_kl(const Vector& f, const Vector& p, double delta) {
    const Vector a = -delta * f;
    double m = -kInf;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (p[i] > 0) m = std::max(m, a[i]);
    double s = 0.0;
    Vector q = Vector::Zero(p.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (p[i] > 0) {
            q[i] = p[i] * std::exp(a[i] - m);
            s += q[i];
        }
    }
    q /= s;
    WorstCase wc;
    wc.value = -(m + std::log(s)) / delta;
    wc.weights = std::move(q);
    wc.c = -wc.value;
    return wc;
}

// Minimizes h(c) = c + (1/delta) sum_i p_i phi*(delta(-f_i - c)).
// h'(c) = 1 - sum_i p_i (phi*)'(delta(-f_i - c)) is nondecreasing in c, so
// the root is bracketed by doubling and then bisected. IEEE inf propagation
// keeps the sign of h' correct even where an exponential conjugate
// overflows during bracketing.
inline double minimize_dual_scalar(const Vector& f, const Vector& p, double delta,
                                   const PhiDivergence& phi) {
    auto hprime = [&](double c) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i)
            if (p[i] > 0) s += p[i] * phi.conj_d1(delta * (-f[i] - c));
        return 1.0 - s;
    };
    double fmin = kInf, fmax = -kInf, fmean = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        if (p[i] > 0) {
            fmin = std::min(fmin, f[i]);
            fmax = std::max(fmax, f[i]);
            fmean += p[i] * f[i];
        }
    }
    double lo = -fmean, hi = -fmean;
    double step = std::max({1.0, fmax - fmin, 1.0 / delta});
    int guard = 0;
    while (hprime(lo) >= 0) {
        lo -= step;
        step *= 2.0;
        if (++guard > 200) throw SolverError("dual scalar: bracket failure (low)", Vector(), kInf, guard);
    }
    step = std::max({1.0, fmax - fmin, 1.0 / delta});
    while (hprime(hi) <= 0) {
        hi += step;
        step *= 2.0;
        if (++guard > 400) throw SolverError("dual scalar: bracket failure (high)", Vector(), kInf, guard);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hprime(mid) < 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline WorstCase worst_case_dual(const Vector& f, const Vector& p, double delta,
                                 const PhiDivergence& phi) {
    const double c = minimize_dual_scalar(f, p, delta, phi);
    double penalty = 0.0;
    double zeta_max = -kInf;
    Vector q = Vector::Zero(p.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        if (p[i] > 0) {
            const double zeta = delta * (-f[i] - c);
            zeta_max = std::max(zeta_max, zeta);
            penalty += p[i] * phi.conj(zeta);
            q[i] = p[i] * phi.conj_d1(zeta);
        }
    }
    if (zeta_max > 700.0)
        throw SolverError("worst_case: conjugate argument beyond exp(700) guard; "
                          "reduce delta or use the relative-entropy closed form",
                          Vector(), zeta_max, 0);
    const double qsum = q.sum();
    if (!std::isfinite(penalty) || std::abs(qsum - 1.0) > 1e-6)
        throw SolverError("worst_case: dual solution failed the simplex check",
                          Vector(), std::abs(qsum - 1.0), 0);
    WorstCase wc;
    wc.value = -(c + penalty / delta);
    wc.weights = q / qsum;
    wc.c = c;
    return wc;
}

// Damped Newton on the joint first-order system of the robust problem in
// (x, c), with the second equation carried in the rescaled form
// -(phi''(1)/delta) * sum p_i ((phi*)'(zeta_i) - 1) so the Jacobian stays
// well conditioned as delta -> 0. Supports an active box set plus the
// budget equality through an explicit multiplier. Also valid for small
// negative delta (used by the expansion code to differentiate through the
// solution path); convexity is never assumed, only a nonsingular Jacobian.
struct FocNewtonResult {
    Vector x;
    double c = 0.0;
    double system_norm = kInf;
    int iterations = 0;
    bool converged = false;
};

inline FocNewtonResult foc_newton(const RewardModel& model,
                                  const EmpiricalDistribution& dist, double delta,
                                  const PhiDivergence& phi, Vector x0, double c0,
                                  double tol = 1e-12, int max_iter = 100) {
    if (delta == 0.0) throw ArgumentError("foc_newton: delta must be nonzero");
    const Eigen::Index m = x0.size();
    const FeasibleSet& fs = model.feasible_set();
    const bool budget = fs.kind == FeasibleSet::Kind::BoxBudget;

    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!budget) {
            free_idx.push_back(i);
        } else {
            const bool at_lo = x0[i] <= fs.lo[i] + 1e-10 * (1.0 + std::abs(fs.lo[i]));
            const bool at_hi = x0[i] >= fs.hi[i] - 1e-10 * (1.0 + std::abs(fs.hi[i]));
            if (!at_lo && !at_hi) free_idx.push_back(i);
        }
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    const Eigen::Index dim = nf + 1 + (budget ? 1 : 0);  // (x_F, c [, nu])

    const double scale2 = -phi.phi2_1 / delta;  // multiplier on the second row

    auto assemble = [&](const Vector& x, double c, double nu, Vector& F, Matrix& J) {
        F.setZero(dim);
        J.setZero(dim, dim);
        Vector r1 = Vector::Zero(m);
        double r2 = 0.0, d_r2_dc = 0.0;
        Matrix d_r1_dx = Matrix::Zero(m, m);
        Vector d_r1_dc = Vector::Zero(m), d_r2_dx = Vector::Zero(m);
        for (Eigen::Index i = 0; i < dist.size(); ++i) {
            const double w = dist.weights[i];
            if (w <= 0) continue;
            const Vector y = dist.samples.row(i);
            const double zeta = -delta * (model.value(x, y) + c);
            const double t1 = phi.conj_d1(zeta);
            const double t2 = phi.conj_d2_or_fd(zeta);
            const Vector g = model.gradient(x, y);
            r1 += w * t1 * g;
            r2 += w * (t1 - 1.0);
            d_r1_dx += w * (-delta * t2 * (g * g.transpose()) + t1 * model.hessian(x, y));
            d_r1_dc += w * (-delta * t2) * g;
            d_r2_dx += w * (-delta * t2) * g;
            d_r2_dc += w * (-delta * t2);
        }
        for (Eigen::Index a = 0; a < nf; ++a) {
            F[a] = r1[free_idx[a]] + (budget ? nu : 0.0);
            for (Eigen::Index b = 0; b < nf; ++b)
                J(a, b) = d_r1_dx(free_idx[a], free_idx[b]);
            J(a, nf) = d_r1_dc[free_idx[a]];
            if (budget) J(a, nf + 1) = 1.0;
        }
        F[nf] = scale2 * r2;
        for (Eigen::Index b = 0; b < nf; ++b) J(nf, b) = scale2 * d_r2_dx[free_idx[b]];
        J(nf, nf) = scale2 * d_r2_dc;
        if (budget) F[nf + 1] = x.sum() - fs.budget;
        if (budget)
            for (Eigen::Index b = 0; b < nf; ++b) J(nf + 1, b) = 1.0;
    };

    Vector x = std::move(x0);
    double c = c0, nu = 0.0;
    if (budget && nf > 0) {
        // start the multiplier at the value minimizing the free-coordinate
        // stationarity norm
        Vector r1 = Vector::Zero(m);
        for (Eigen::Index i = 0; i < dist.size(); ++i) {
            const double w = dist.weights[i];
            if (w <= 0) continue;
            const Vector y = dist.samples.row(i);
            const double t1 = phi.conj_d1(-delta * (model.value(x, y) + c));
            r1 += w * t1 * model.gradient(x, y);
        }
        double s = 0.0;
        for (Eigen::Index a = 0; a < nf; ++a) s += r1[free_idx[a]];
        nu = -s / static_cast<double>(nf);
    }

    Vector F(dim);
    Matrix J(dim, dim);
    FocNewtonResult res;
    assemble(x, c, nu, F, J);
    double fnorm = F.norm();
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        if (fnorm <= tol * (1.0 + x.norm() + std::abs(c))) break;
        Eigen::FullPivLU<Matrix> lu(J);
        if (!lu.isInvertible()) break;
        const Vector step = lu.solve(-F);
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            Vector xc = x;
            for (Eigen::Index a = 0; a < nf; ++a) {
                xc[free_idx[a]] += t * step[a];
                if (budget)
                    xc[free_idx[a]] =
                        std::clamp(xc[free_idx[a]], fs.lo[free_idx[a]], fs.hi[free_idx[a]]);
            }
            const double cc = c + t * step[nf];
            const double nuc = budget ? nu + t * step[nf + 1] : 0.0;
            Vector Fc(dim);
            Matrix Jc(dim, dim);
            assemble(xc, cc, nuc, Fc, Jc);
            if (Fc.norm() < fnorm) {
                x = std::move(xc);
                c = cc;
                nu = nuc;
                F = std::move(Fc);
                J = std::move(Jc);
                fnorm = F.norm();
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }
    res.x = std::move(x);
    res.c = c;
    res.system_norm = fnorm;
    res.converged = fnorm <= tol * (1.0 + res.x.norm() + std::abs(c));
    return res;
}

}  // namespace detail

/// Worst case of the penalized objective on raw reward values:
///   min over q of { sum q_i f_i + (1/delta) sum p_i phi(q_i/p_i) }
/// solved through the scalar convex dual (or the closed form for relative
/// entropy). Requires delta > 0.
inline WorstCase worst_case_rewards(const Vector& f, const Vector& p, double delta,
                                    const PhiDivergence& phi) {
    if (!(delta > 0)) throw ArgumentError("worst_case: delta must be positive");
    if (f.size() != p.size() || f.size() == 0)
        throw ArgumentError("worst_case: reward/weight size mismatch");
    if (phi.kind == PhiDivergence::Kind::RelativeEntropy)
        return detail::worst_case_kl(f, p, delta);
    return detail::worst_case_dual(f, p, delta, phi);
}

inline Vector reward_values(const RewardModel& model, const Vector& x,
                            const EmpiricalDistribution& dist) {
    Vector f(dist.size());
    for (Eigen::Index i = 0; i < dist.size(); ++i)
        f[i] = model.value(x, dist.samples.row(i));
    return f;
}

inline WorstCase worst_case(const RewardModel& model, const Vector& x,
                            const EmpiricalDistribution& dist, double delta,
                            const PhiDivergence& phi) {
    return worst_case_rewards(reward_values(model, x, dist), dist.weights, delta, phi);
}

/// Norm of the stacked first-order system of the robust problem at (x, c):
/// the adversarially weighted reward gradient (projected through the
/// feasible set) and the multiplier-normalization equation. Requires
/// delta > 0.
inline double foc_residual(const RewardModel& model, const Vector& x, double c,
                           const EmpiricalDistribution& dist, double delta,
                           const PhiDivergence& phi) {
    if (!(delta > 0)) throw ArgumentError("foc_residual: delta must be positive");
    Vector r1 = Vector::Zero(x.size());
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
        if (dist.weights[i] <= 0) continue;
        const Vector y = dist.samples.row(i);
        const double t = phi.conj_d1(-delta * (model.value(x, y) + c));
        r1 += dist.weights[i] * t * model.gradient(x, y);
        r2 += dist.weights[i] * (t - 1.0);
    }
    const FeasibleSet& fs = model.feasible_set();
    const double n1 = (fs.kind == FeasibleSet::Kind::Unconstrained)
                          ? r1.norm()
                          : (x - fs.project(x + r1)).norm();
    return std::sqrt(n1 * n1 + r2 * r2);
}

/// Solves the robust empirical optimization problem
///
///   min over (x in feasible set, c) of
///       c + (1/delta) sum_i p_i phi*(delta(-f(x, Y_i) - c))
///
/// delta = 0 falls back to sample-average optimization with c set to minus
/// the empirical mean. For relative entropy the equivalent closed-form
/// worst case is maximized directly over x; the generic path alternates
/// exact scalar minimization in c with projected Newton steps in x. Both
/// paths finish at the same first-order conditions.
inline RobustSolution robust_optimize(const RewardModel& model,
                                      const EmpiricalDistribution& dist, double delta,
                                      const PhiDivergence& phi,
                                      const SolveOptions& opts = {},
                                      RobustMethod method = RobustMethod::Auto) {
    if (delta < 0) throw ArgumentError("robust_optimize: delta must be >= 0");

    RobustSolution sol;
    sol.delta = delta;

    if (delta == 0.0) {
        SolveResult er = empirical_optimize_detailed(model, dist, opts);
        sol.x = std::move(er.x);
        sol.objective = er.value;
        sol.c = -er.value;
        sol.iterations = er.iterations;
        sol.residual = er.residual;
        return sol;
    }

    if (method == RobustMethod::Auto)
        method = (phi.kind == PhiDivergence::Kind::RelativeEntropy)
                     ? RobustMethod::ClosedFormKL
                     : RobustMethod::Dual;

    if (method == RobustMethod::ClosedFormKL) {
        if (phi.kind != PhiDivergence::Kind::RelativeEntropy)
            throw ArgumentError("robust_optimize: closed form requires relative entropy");
        SmoothObjective obj;
        obj.value = [&](const Vector& x) {
            return detail::worst_case_kl(reward_values(model, x, dist), dist.weights, delta).value;
        };
        obj.grad = [&](const Vector& x) {
            const WorstCase wc =
                detail::worst_case_kl(reward_values(model, x, dist), dist.weights, delta);
            Vector g = Vector::Zero(x.size());
            for (Eigen::Index i = 0; i < dist.size(); ++i)
                if (wc.weights[i] > 0) g += wc.weights[i] * model.gradient(x, dist.samples.row(i));
            return g;
        };
        obj.hess = [&](const Vector& x) {
            const WorstCase wc =
                detail::worst_case_kl(reward_values(model, x, dist), dist.weights, delta);
            Matrix h = Matrix::Zero(x.size(), x.size());
            Vector gbar = Vector::Zero(x.size());
            Matrix gg = Matrix::Zero(x.size(), x.size());
            for (Eigen::Index i = 0; i < dist.size(); ++i) {
                if (wc.weights[i] <= 0) continue;
                const Vector y = dist.samples.row(i);
                const Vector gi = model.gradient(x, y);
                h += wc.weights[i] * model.hessian(x, y);
                gg += wc.weights[i] * (gi * gi.transpose());
                gbar += wc.weights[i] * gi;
            }
            h -= delta * (gg - gbar * gbar.transpose());
            return h;
        };
        SolveResult res =
            maximize_concave(obj, model.feasible_set(), model.initial_point(dist), opts);
        if (!res.converged)
            throw SolverError("robust_optimize: no convergence after " +
                                  std::to_string(res.iterations) + " iterations",
                              res.x, res.residual, res.iterations);
        sol.x = std::move(res.x);
        sol.objective = res.value;
        sol.c = -res.value;
        sol.iterations = res.iterations;
        sol.residual = foc_residual(model, sol.x, sol.c, dist, delta, phi);
        return sol;
    }

    // generic dual path: alternate exact c-minimization with x-steps
    Vector x = model.feasible_set().project(model.initial_point(dist));
    double c = detail::minimize_dual_scalar(reward_values(model, x, dist), dist.weights,
                                            delta, phi);
    int total_iter = 0;
    const int max_outer = 200;
    double res_norm = kInf;
    for (int outer = 0; outer < max_outer; ++outer) {
        SmoothObjective neg_j;
        neg_j.value = [&, c](const Vector& xv) {
            const Vector f = reward_values(model, xv, dist);
            double pen = 0.0;
            for (Eigen::Index i = 0; i < f.size(); ++i)
                if (dist.weights[i] > 0)
                    pen += dist.weights[i] * phi.conj(delta * (-f[i] - c));
            return -(c + pen / delta);
        };
        neg_j.grad = [&, c](const Vector& xv) {
            Vector g = Vector::Zero(xv.size());
            for (Eigen::Index i = 0; i < dist.size(); ++i) {
                if (dist.weights[i] <= 0) continue;
                const Vector y = dist.samples.row(i);
                const double t = phi.conj_d1(delta * (-model.value(xv, y) - c));
                g += dist.weights[i] * t * model.gradient(xv, y);
            }
            return g;
        };
        neg_j.hess = [&, c](const Vector& xv) {
            Matrix h = Matrix::Zero(xv.size(), xv.size());
            for (Eigen::Index i = 0; i < dist.size(); ++i) {
                if (dist.weights[i] <= 0) continue;
                const Vector y = dist.samples.row(i);
                const double zeta = delta * (-model.value(xv, y) - c);
                const Vector gi = model.gradient(xv, y);
                h += dist.weights[i] * (phi.conj_d1(zeta) * model.hessian(xv, y) -
                                        delta * phi.conj_d2_or_fd(zeta) * (gi * gi.transpose()));
            }
            return h;
        };
        SolveResult inner = maximize_concave(neg_j, model.feasible_set(), x, opts);
        x = std::move(inner.x);
        total_iter += inner.iterations;
        c = detail::minimize_dual_scalar(reward_values(model, x, dist), dist.weights,
                                         delta, phi);
        res_norm = foc_residual(model, x, c, dist, delta, phi);
        double xc_norm = std::sqrt(x.squaredNorm() + c * c);
        if (res_norm <= 1e-3 * (1.0 + xc_norm) &&
            res_norm > 10.0 * opts.tol * (1.0 + xc_norm)) {
            // terminal polish: joint Newton on the first-order system
            auto polished = detail::foc_newton(model, dist, delta, phi, x, c,
                                               std::min(opts.tol, 1e-12));
            total_iter += polished.iterations;
            const double polished_res =
                foc_residual(model, polished.x, polished.c, dist, delta, phi);
            if (polished_res < res_norm) {
                x = std::move(polished.x);
                c = polished.c;
                res_norm = polished_res;
                xc_norm = std::sqrt(x.squaredNorm() + c * c);
            }
        }
        if (res_norm <= 10.0 * opts.tol * (1.0 + xc_norm)) {
            sol.x = std::move(x);
            sol.c = c;
            sol.iterations = total_iter;
            sol.residual = res_norm;
            sol.objective =
                worst_case_rewards(reward_values(model, sol.x, dist), dist.weights, delta, phi)
                    .value;
            return sol;
        }
    }
    throw SolverError("robust_optimize: dual path stalled after " +
                          std::to_string(max_outer) + " rounds (residual " +
                          std::to_string(res_norm) + ")",
                      x, res_norm, total_iter);
}

}  // namespace dromv
