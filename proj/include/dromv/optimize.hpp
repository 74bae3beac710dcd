#pragma once

#include <functional>
#include <utility>

#include "dromv/common.hpp"
#include "dromv/reward_model.hpp"

namespace dromv {

struct SolveOptions {
    double tol = 1e-8;     // projected-gradient norm <= tol * (1 + ||x||)
    int max_iter = 10000;  // iteration cap before a diagnostic error
};

struct SolveResult {
    Vector x;
    double value = 0.0;
    double residual = kInf;  // projected-gradient norm at exit
    int iterations = 0;
    bool converged = false;
};

/// Smooth concave objective with optional second derivatives.
struct SmoothObjective {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> grad;
    std::function<Matrix(const Vector&)> hess;  // empty -> gradient method only
};

namespace detail {

// Newton direction restricted to the inactive coordinates of the box+budget
// set: solve [H_FF 1; 1' 0][d_F; nu] = [-g_F; 0] and keep active coordinates
// fixed. Returns false when the KKT system is singular or d is not an
// ascent direction.
inline bool reduced_newton_direction(const Matrix& H, const Vector& g,
                                     const std::vector<Eigen::Index>& free_idx,
                                     bool with_budget_row, Vector& d) {
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    if (nf == 0) return false;
    const Eigen::Index dim = with_budget_row ? nf + 1 : nf;
    Matrix K = Matrix::Zero(dim, dim);
    Vector rhs = Vector::Zero(dim);
    for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) K(a, b) = H(free_idx[a], free_idx[b]);
        rhs[a] = -g[free_idx[a]];
        if (with_budget_row) {
            K(a, nf) = 1.0;
            K(nf, a) = 1.0;
        }
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) return false;
    const Vector sol = lu.solve(rhs);
    d = Vector::Zero(g.size());
    for (Eigen::Index a = 0; a < nf; ++a) d[free_idx[a]] = sol[a];
    if (!d.allFinite()) return false;
    // reject only materially descent directions; near the optimum g'd is a
    // tiny positive that must still pass
    return g.dot(d) >= -1e-14 * (1.0 + g.norm() * d.norm());
}

}  // namespace detail

/// Maximizes a smooth concave objective over the feasible set by projected
/// gradient ascent with an Armijo line search, taking (reduced) Newton
/// steps whenever second derivatives are available and the Newton system
/// is well posed. Terminates when || x - P(x + grad) || <= tol (1 + ||x||).
inline SolveResult maximize_concave(const SmoothObjective& obj, const FeasibleSet& fs,
                                    Vector x0, const SolveOptions& opts = {}) {
    Vector x = fs.project(std::move(x0));
    const Eigen::Index m = x.size();
    SolveResult res;

    double fx = obj.value(x);
    for (int it = 1; it <= opts.max_iter; ++it) {
        res.iterations = it;
        const Vector g = obj.grad(x);
        const Vector pg = x - fs.project(x + g);
        res.residual = pg.norm();
        if (res.residual <= opts.tol * (1.0 + x.norm())) {
            res.converged = true;
            break;
        }

        // candidate directions: Newton first (when available), gradient after
        Vector newton_dir;
        bool have_newton = false;
        if (obj.hess && m > 0) {
            const Matrix H = obj.hess(x);
            if (fs.kind == FeasibleSet::Kind::Unconstrained) {
                Eigen::LDLT<Matrix> ldlt(-H);
                if (ldlt.info() == Eigen::Success) {
                    newton_dir = ldlt.solve(g);
                    have_newton = newton_dir.allFinite() &&
                                  g.dot(newton_dir) >=
                                      -1e-14 * (1.0 + g.norm() * newton_dir.norm());
                }
            } else {
                // coordinates pinned by the projection count as active
                std::vector<Eigen::Index> free_idx;
                const Vector probe = fs.project(x + g);
                for (Eigen::Index i = 0; i < m; ++i) {
                    const bool at_lo = x[i] <= fs.lo[i] + 1e-12 * (1.0 + std::abs(fs.lo[i]));
                    const bool at_hi = x[i] >= fs.hi[i] - 1e-12 * (1.0 + std::abs(fs.hi[i]));
                    const bool pinned = (at_lo || at_hi) && std::abs(probe[i] - x[i]) < 1e-14;
                    if (!pinned) free_idx.push_back(i);
                }
                have_newton = detail::reduced_newton_direction(H, g, free_idx, true, newton_dir);
            }
        }

        // try the Newton direction first, then fall back to the gradient
        bool stepped = false;
        for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
            if (attempt == 0 && !have_newton) continue;
            const Vector& d = (attempt == 0) ? newton_dir : g;
            double t = 1.0;
            for (int ls = 0; ls < 60; ++ls) {
                Vector xc = fs.project(x + t * d);
                double fc = obj.value(xc);
                const double pred = g.dot(xc - x);
                if (attempt == 0 && ls == 0 && !(pred > 0 && fc >= fx + 1e-4 * pred) &&
                    fc >= fx - 1e-11 * (1.0 + std::abs(fx))) {
                    // terminal regime: value changes are inside summation
                    // noise, so accept a full Newton step that halves the
                    // residual (bounded loss: each such step halves it again)
                    const Vector gc = obj.grad(xc);
                    if ((xc - fs.project(xc + gc)).norm() < 0.5 * res.residual) {
                        x = std::move(xc);
                        fx = fc;
                        stepped = true;
                        break;
                    }
                }
                if (pred > 0 && fc >= fx + 1e-4 * pred) {
                    // greedy doubling: ill-scaled gradients need long steps
                    double tt = t;
                    for (int ex = 0; ex < 60; ++ex) {
                        Vector xe = fs.project(x + 2.0 * tt * d);
                        const double fe = obj.value(xe);
                        if (fe > fc + 1e-16 * (1.0 + std::abs(fc))) {
                            tt *= 2.0;
                            xc = std::move(xe);
                            fc = fe;
                        } else {
                            break;
                        }
                    }
                    x = std::move(xc);
                    fx = fc;
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if (!stepped) break;  // stalled; residual reported as-is
    }
    res.x = std::move(x);
    res.value = fx;
    return res;
}

/// Weighted-sum objective of a reward model over an empirical distribution.
inline SmoothObjective empirical_objective(const RewardModel& model,
                                           const EmpiricalDistribution& dist) {
    SmoothObjective obj;
    obj.value = [&model, &dist](const Vector& x) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < dist.size(); ++i)
            v += dist.weights[i] * model.value(x, dist.samples.row(i));
        return v;
    };
    obj.grad = [&model, &dist](const Vector& x) {
        Vector g = Vector::Zero(x.size());
        for (Eigen::Index i = 0; i < dist.size(); ++i)
            g += dist.weights[i] * model.gradient(x, dist.samples.row(i));
        return g;
    };
    obj.hess = [&model, &dist](const Vector& x) {
        Matrix h = Matrix::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < dist.size(); ++i)
            h += dist.weights[i] * model.hessian(x, dist.samples.row(i));
        return h;
    };
    return obj;
}

/// Sample-average optimization: maximizes sum_i p_i f(x, Y_i) over the
/// model's feasible set. Throws SolverError (carrying the last iterate)
/// when the iteration cap is hit before convergence.
inline SolveResult empirical_optimize_detailed(const RewardModel& model,
                                               const EmpiricalDistribution& dist,
                                               const SolveOptions& opts = {}) {
    if (dist.size() == 0) throw ArgumentError("empirical_optimize: empty distribution");
    const SmoothObjective obj = empirical_objective(model, dist);
    SolveResult res = maximize_concave(obj, model.feasible_set(),
                                       model.initial_point(dist), opts);
    if (!res.converged) {
        const char* how = res.iterations >= opts.max_iter ? "iteration cap hit at "
                                                          : "line search stalled at ";
        throw SolverError("empirical_optimize: " + std::string(how) +
                              std::to_string(res.iterations) + " iterations (residual " +
                              std::to_string(res.residual) + ")",
                          res.x, res.residual, res.iterations);
    }
    return res;
}

inline Vector empirical_optimize(const RewardModel& model,
                                 const EmpiricalDistribution& dist,
                                 const SolveOptions& opts = {}) {
    return empirical_optimize_detailed(model, dist, opts).x;
}

}  // namespace dromv
