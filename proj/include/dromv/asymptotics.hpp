#pragma once

#include <vector>

#include "dromv/robust.hpp"

namespace dromv {

/// Everything the small-delta expansions of the out-of-sample mean and
/// variance need, evaluated under a reference distribution (either a known
/// data-generating model represented by a large i.i.d. sample, or an
/// empirical data set):
///
///   x_star   optimizer of the expected reward
///   mu_f     Cov[grad_x f, f] at x_star
///   sigma_f  E[hess_x f] at x_star (negative definite)
///   pi       first-order solution drift, (1/phi''(1)) sigma_f^{-1} mu_f
///   xi0      limit covariance of sqrt(n) (x_n(0) - x_star)
///   eta0     Var[f(x_star, Y)]
///   kappa0   sigma_f^{-1} mu_f
///   rho      order delta/n adjustment to the out-of-sample mean
///   theta    order delta/n adjustment to the out-of-sample variance
struct AsymptoticSummary {
    Vector x_star;
    Vector mu_f;
    Matrix sigma_f;
    Vector pi;
    Matrix xi0;
    double eta0 = 0.0;
    Vector kappa0;
    double rho = 0.0;
    double theta = 0.0;

    // cached pieces consumed by predicted_curves
    double phi2_1 = 1.0;          // phi''(1) of the divergence
    double reward_mean = 0.0;     // E[f(x_star, Y)]
    double quad_form = 0.0;       // mu_f' sigma_f^{-1} mu_f
    double jensen_trace = 0.0;    // tr(xi0 * sigma_f)
    double var_hess_trace = 0.0;  // tr(xi0 * hess_x Var[f])
};

struct AsymptoticsOptions {
    double delta_step = 1e-3;   // step for the xi'(0) central difference
    double x_step_rel = 1e-3;   // relative step for x-gradients of traces
    SolveOptions solve;
};

namespace detail {

// weighted moments of (f, grad f, hess f) at a fixed decision
struct RewardMoments {
    double mean_f = 0.0;
    double var_f = 0.0;
    Vector mean_g;
    Vector mu_f;       // Cov[g, f]
    Matrix sigma_f;    // E[H]
    Matrix var_g;      // Var[g]
    Matrix cov_f_h;    // Cov[f, H]
    Matrix xi0;        // sigma_f^{-1} var_g sigma_f^{-T}
    Matrix var_hess;   // hess of Var[f]: 2 var_g + 2 cov_f_h
};

inline RewardMoments reward_moments(const RewardModel& model,
                                    const EmpiricalDistribution& dist, const Vector& x) {
    const Eigen::Index n = dist.size();
    const Eigen::Index m = x.size();
    RewardMoments mo;
    mo.mean_g = Vector::Zero(m);
    mo.sigma_f = Matrix::Zero(m, m);

    Vector f(n);
    Matrix g(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector y = dist.samples.row(i);
        f[i] = model.value(x, y);
        g.row(i) = model.gradient(x, y);
        mo.mean_f += dist.weights[i] * f[i];
        mo.sigma_f += dist.weights[i] * model.hessian(x, y);
    }
    for (Eigen::Index i = 0; i < n; ++i) mo.mean_g += dist.weights[i] * Vector(g.row(i));

    mo.mu_f = Vector::Zero(m);
    mo.var_g = Matrix::Zero(m, m);
    mo.cov_f_h = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double df = f[i] - mo.mean_f;
        const Vector dg = Vector(g.row(i)) - mo.mean_g;
        mo.var_f += dist.weights[i] * df * df;
        mo.mu_f += dist.weights[i] * df * dg;
        mo.var_g += dist.weights[i] * (dg * dg.transpose());
        mo.cov_f_h += dist.weights[i] * df * model.hessian(x, dist.samples.row(i));
    }
    if (m > 0) {
        Eigen::FullPivLU<Matrix> lu(mo.sigma_f);
        if (!lu.isInvertible())
            throw SolverError("asymptotics: E[hess f] is singular", x, 0.0, 0);
        const Matrix sinv_g = lu.solve(mo.var_g);
        mo.xi0 = lu.solve(sinv_g.transpose()).transpose();
    } else {
        mo.xi0 = Matrix::Zero(0, 0);
    }
    mo.var_hess = 2.0 * mo.var_g + 2.0 * mo.cov_f_h;
    return mo;
}

// A^{-1} B A^{-1}' with A = E[-J_psi], B = E[psi psi'] at the given (x, c).
// psi carries the -(phi''(1)/delta) scaling on its last coordinate; at
// delta = 0 the analytic limits psi = (g, f + c), J = [[H, 0], [g', 1]]
// are used.
inline Matrix sandwich_at(const RewardModel& model, const EmpiricalDistribution& dist,
                          const PhiDivergence& phi, double delta, const Vector& x,
                          double c) {
    const Eigen::Index m = x.size();
    Matrix A = Matrix::Zero(m + 1, m + 1);
    Matrix B = Matrix::Zero(m + 1, m + 1);
    Vector psi(m + 1);
    Matrix J(m + 1, m + 1);
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
        const double w = dist.weights[i];
        if (w <= 0) continue;
        const Vector y = dist.samples.row(i);
        const double fi = model.value(x, y);
        const Vector gi = model.gradient(x, y);
        const Matrix hi = model.hessian(x, y);
        if (delta == 0.0) {
            psi.head(m) = gi;
            psi[m] = fi + c;
            J.topLeftCorner(m, m) = hi;
            J.topRightCorner(m, 1).setZero();
            J.bottomLeftCorner(1, m) = gi.transpose();
            J(m, m) = 1.0;
        } else {
            const double zeta = -delta * (fi + c);
            const double t1 = phi.conj_d1(zeta);
            const double t2 = phi.conj_d2_or_fd(zeta);
            const double s2 = -phi.phi2_1 / delta;
            psi.head(m) = t1 * gi;
            psi[m] = s2 * (t1 - 1.0);
            J.topLeftCorner(m, m) = -delta * t2 * (gi * gi.transpose()) + t1 * hi;
            J.topRightCorner(m, 1) = -delta * t2 * gi;
            J.bottomLeftCorner(1, m) = phi.phi2_1 * t2 * gi.transpose();
            J(m, m) = phi.phi2_1 * t2;
        }
        A -= w * J;
        B += w * (psi * psi.transpose());
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible())
        throw SolverError("sandwich_covariance: A is singular", x, 0.0, 0);
    const Matrix AinvB = lu.solve(B);
    return lu.solve(AinvB.transpose()).transpose();
}

// (x*(delta), c*(delta)) on the reference distribution by Newton
// continuation from the delta = 0 solution; valid for either sign of delta.
inline std::pair<Vector, double> solve_on_path(const RewardModel& model,
                                               const EmpiricalDistribution& dist,
                                               const PhiDivergence& phi, double delta,
                                               const Vector& x0, double c0) {
    if (delta == 0.0) return {x0, c0};
    const auto r = foc_newton(model, dist, delta, phi, x0, c0, 1e-12);
    if (!r.converged)
        throw SolverError("asymptotics: continuation solve failed at delta = " +
                              std::to_string(delta),
                          r.x, r.system_norm, r.iterations);
    return {r.x, r.c};
}

}  // namespace detail

/// Sandwich covariance V(delta) of the robust estimating equations at the
/// solution under the reference distribution. The delta -> 0 corner blocks
/// are xi(0), kappa(0) and eta(0).
inline Matrix sandwich_covariance(const RewardModel& model,
                                  const EmpiricalDistribution& ref,
                                  const PhiDivergence& phi, double delta,
                                  const AsymptoticsOptions& opts = {}) {
    if (delta < 0) throw ArgumentError("sandwich_covariance: delta must be >= 0");
    SolveOptions solve = opts.solve;
    solve.tol = std::min(solve.tol, 1e-10);
    const SolveResult base = empirical_optimize_detailed(model, ref, solve);
    const auto [mean0, var0] = model_reward_stats(model, base.x, ref);
    (void)var0;
    const auto [x, c] = detail::solve_on_path(model, ref, phi, delta, base.x, -mean0);
    return detail::sandwich_at(model, ref, phi, delta, x, c);
}

/// Computes every constant in the expansions of the robust solution and of
/// the out-of-sample reward around delta = 0. xi'(0) is obtained by a
/// central finite difference of the sandwich along the solution path; the
/// x-gradients of the trace terms in rho and theta are finite-differenced
/// around x_star.
inline AsymptoticSummary summarize(const RewardModel& model,
                                   const EmpiricalDistribution& ref,
                                   const PhiDivergence& phi,
                                   const AsymptoticsOptions& opts = {}) {
    SolveOptions solve = opts.solve;
    solve.tol = std::min(solve.tol, 1e-10);
    const SolveResult base = empirical_optimize_detailed(model, ref, solve);
    const Vector x0 = base.x;
    const Eigen::Index m = x0.size();

    const auto mo = detail::reward_moments(model, ref, x0);

    AsymptoticSummary s;
    s.x_star = x0;
    s.mu_f = mo.mu_f;
    s.sigma_f = mo.sigma_f;
    s.eta0 = mo.var_f;
    s.xi0 = mo.xi0;
    s.phi2_1 = phi.phi2_1;
    s.reward_mean = mo.mean_f;
    if (m > 0) {
        Eigen::FullPivLU<Matrix> lu(mo.sigma_f);
        s.kappa0 = lu.solve(mo.mu_f);
        s.pi = s.kappa0 / phi.phi2_1;
        s.quad_form = mo.mu_f.dot(s.kappa0);
    } else {
        s.kappa0 = Vector();
        s.pi = Vector();
    }
    s.jensen_trace = (mo.xi0 * mo.sigma_f).trace();
    s.var_hess_trace = (mo.xi0 * mo.var_hess).trace();

    // xi'(0): central difference of the sandwich top-left block along the
    // solution path, differentiating through (x*(delta), c*(delta))
    const double h = opts.delta_step;
    auto xi_at = [&](double d) {
        const auto [x, c] = detail::solve_on_path(model, ref, phi, d, x0, -mo.mean_f);
        return Matrix(detail::sandwich_at(model, ref, phi, d, x, c).topLeftCorner(m, m));
    };
    const Matrix xi_prime = (xi_at(h) - xi_at(-h)) / (2.0 * h);

    // x-gradients of the trace terms, by central differences per coordinate
    auto traces_at = [&](const Vector& x) {
        const auto mx = detail::reward_moments(model, ref, x);
        return std::pair<double, double>{(mx.xi0 * mx.sigma_f).trace(),
                                         (mx.xi0 * mx.var_hess).trace()};
    };
    Vector grad_t1 = Vector::Zero(m), grad_t2 = Vector::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double hk = opts.x_step_rel * std::max(1.0, std::abs(x0[k]));
        Vector xp = x0, xm = x0;
        xp[k] += hk;
        xm[k] -= hk;
        const auto [t1p, t2p] = traces_at(xp);
        const auto [t1m, t2m] = traces_at(xm);
        grad_t1[k] = (t1p - t1m) / (2.0 * hk);
        grad_t2[k] = (t2p - t2m) / (2.0 * hk);
    }

    s.rho = (xi_prime * mo.sigma_f).trace() + (m > 0 ? s.pi.dot(grad_t1) : 0.0);
    s.theta = (xi_prime * mo.var_hess).trace() + (m > 0 ? s.pi.dot(grad_t2) : 0.0);
    return s;
}

struct CurvePoint {
    double delta = 0.0;
    double mean_pred = 0.0;
    double var_pred = 0.0;
};

/// Predicted out-of-sample mean and variance of the reward under the robust
/// solution at sample size n:
///
///   mean(delta) = [E f(x*(0)) + tr(xi0 sigma_f)/(2n)]
///                 + delta^2 / (2 phi''(1)^2) mu' sigma^{-1} mu + delta rho/(2n)
///   var(delta)  = [Var f(x*(0)) + tr(xi0 hess Var)/(2n)]
///                 + 2 delta / phi''(1) mu' sigma^{-1} mu + delta theta/(2n)
///
/// The delta = 0 values are the empirical-optimization baselines.
inline std::vector<CurvePoint> predicted_curves(const AsymptoticSummary& s, double n,
                                                const std::vector<double>& delta_grid) {
    if (!(n >= 1)) throw ArgumentError("predicted_curves: n must be >= 1");
    std::vector<CurvePoint> out;
    out.reserve(delta_grid.size());
    const double mean_base = s.reward_mean + s.jensen_trace / (2.0 * n);
    const double var_base = s.eta0 + s.var_hess_trace / (2.0 * n);
    for (double d : delta_grid) {
        CurvePoint p;
        p.delta = d;
        p.mean_pred = mean_base +
                      0.5 * d * d / (s.phi2_1 * s.phi2_1) * s.quad_form +
                      d * s.rho / (2.0 * n);
        p.var_pred = var_base + 2.0 * d / s.phi2_1 * s.quad_form + d * s.theta / (2.0 * n);
        out.push_back(p);
    }
    return out;
}

}  // namespace dromv
