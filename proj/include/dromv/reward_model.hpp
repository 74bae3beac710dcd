#pragma once

#include <algorithm>
#include <utility>

#include "dromv/common.hpp"
#include "dromv/empirical.hpp"

namespace dromv {

/// Feasible set for the decision vector. Either all of R^m or a box
/// intersected with a budget hyperplane { lo <= x <= hi, sum(x) = budget }.
struct FeasibleSet {
    enum class Kind { Unconstrained, BoxBudget };

    Kind kind = Kind::Unconstrained;
    Vector lo, hi;
    double budget = 0.0;

    static FeasibleSet unconstrained() { return FeasibleSet{}; }

    static FeasibleSet box_budget(Vector lo, Vector hi, double budget) {
        if (lo.size() != hi.size() || lo.size() == 0)
            throw ArgumentError("box_budget: bound size mismatch");
        double slo = 0.0, shi = 0.0;
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (!(lo[i] <= hi[i])) throw ArgumentError("box_budget: lo > hi");
            slo += lo[i];
            shi += hi[i];
        }
        if (!(slo <= budget && budget <= shi))
            throw ArgumentError("box_budget: budget outside [sum lo, sum hi]");
        FeasibleSet f;
        f.kind = Kind::BoxBudget;
        f.lo = std::move(lo);
        f.hi = std::move(hi);
        f.budget = budget;
        return f;
    }

    /// Euclidean projection. For the box+budget set this is the standard
    /// clamped shift x_i = clamp(v_i - lambda, lo_i, hi_i) with the budget
    /// multiplier lambda found by bisection (sum is monotone in lambda).
    Vector project(const Vector& v) const {
        if (kind == Kind::Unconstrained) return v;
        if (v.size() != lo.size())
            throw ArgumentError("project: dimension mismatch");
        double llo = kInf, lhi = -kInf;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            llo = std::min(llo, v[i] - hi[i]);
            lhi = std::max(lhi, v[i] - lo[i]);
        }
        auto shifted_sum = [&](double lam) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                s += std::clamp(v[i] - lam, lo[i], hi[i]);
            return s;
        };
        // shifted_sum(llo) = sum(hi) >= budget, shifted_sum(lhi) = sum(lo) <= budget
        for (int it = 0; it < 200 && lhi - llo > 1e-15 * (1.0 + std::abs(llo) + std::abs(lhi)); ++it) {
            const double mid = 0.5 * (llo + lhi);
            if (shifted_sum(mid) >= budget)
                llo = mid;
            else
                lhi = mid;
        }
        const double lam = 0.5 * (llo + lhi);
        Vector x(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            x[i] = std::clamp(v[i] - lam, lo[i], hi[i]);
        // close the residual budget error on the free coordinates
        double gap = budget - x.sum();
        if (gap != 0.0) {
            int free_count = 0;
            for (Eigen::Index i = 0; i < x.size(); ++i)
                if (x[i] > lo[i] && x[i] < hi[i]) ++free_count;
            if (free_count > 0) {
                const double adj = gap / free_count;
                for (Eigen::Index i = 0; i < x.size(); ++i)
                    if (x[i] > lo[i] && x[i] < hi[i])
                        x[i] = std::clamp(x[i] + adj, lo[i], hi[i]);
            }
        }
        return x;
    }

    bool contains(const Vector& x, double tol = 1e-9) const {
        if (kind == Kind::Unconstrained) return true;
        if (x.size() != lo.size()) return false;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        return std::abs(x.sum() - budget) <= tol * (1.0 + std::abs(budget));
    }
};

/// Evaluator for a reward f(x, Y): value, gradient and Hessian in the
/// decision x, plus the feasible set. Concrete rewards are expected to be
/// concave in x (the generic solvers rely on it).
class RewardModel {
  public:
    virtual ~RewardModel() = default;

    virtual int dim_x() const = 0;
    virtual double value(const Vector& x, const Vector& y) const = 0;
    virtual Vector gradient(const Vector& x, const Vector& y) const = 0;
    virtual Matrix hessian(const Vector& x, const Vector& y) const = 0;

    virtual const FeasibleSet& feasible_set() const { return unconstrained_; }

    /// Deterministic starting point for solvers; may depend on the data.
    virtual Vector initial_point(const EmpiricalDistribution&) const {
        return feasible_set().project(Vector::Zero(dim_x()));
    }

  private:
    FeasibleSet unconstrained_;
};

/// Softened minimum: -eps * log(exp(-a/eps) + exp(-b/eps)), computed in the
/// shifted form min - eps*log(1 + exp(-|a-b|/eps)) so nothing overflows.
/// eps = 0 gives the exact minimum.
inline double smoothed_min(double a, double b, double eps) {
    if (eps < 0) throw ArgumentError("smoothed_min: eps must be >= 0");
    const double m = std::min(a, b);
    if (eps == 0.0) return m;
    return m - eps * std::log1p(std::exp(-std::abs(a - b) / eps));
}

/// Weighted mean and variance of the reward f(x, Y) under dist.
inline std::pair<double, double> model_reward_stats(const RewardModel& model,
                                                    const Vector& x,
                                                    const EmpiricalDistribution& dist) {
    if (dist.size() == 0) throw ArgumentError("model_reward_stats: empty distribution");
    const Eigen::Index n = dist.size();
    double mean = 0.0;
    Vector f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        f[i] = model.value(x, dist.samples.row(i));
        mean += dist.weights[i] * f[i];
    }
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = f[i] - mean;
        var += dist.weights[i] * d * d;
    }
    return {mean, var};
}

}  // namespace dromv
