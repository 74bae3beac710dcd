#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "dromv/reward_model.hpp"

namespace dromv {

/// f(x, Y) = -||x - Y||^2 / 2. Quadratic test model; the empirical optimum
/// is the weighted sample mean, which makes it the reference subject for
/// the expansion and bias checks.
class QuadraticToyModel final : public RewardModel {
  public:
    explicit QuadraticToyModel(int dim = 1) : dim_(dim) {
        if (dim < 1) throw ArgumentError("QuadraticToyModel: dim must be >= 1");
    }

    int dim_x() const override { return dim_; }

    double value(const Vector& x, const Vector& y) const override {
        return -0.5 * (x - y).squaredNorm();
    }

    Vector gradient(const Vector& x, const Vector& y) const override {
        return y - x;
    }

    Matrix hessian(const Vector& x, const Vector&) const override {
        return -Matrix::Identity(x.size(), x.size());
    }

  private:
    int dim_;
};

/// Inventory reward f(x, Y) = r * min(x, Y) - c * x with scalar order
/// quantity x and random demand Y. The raw minimum is not differentiable,
/// so the model evaluates the log-sum-exp softened minimum with softness
/// eps; eps = 0 selects the exact kinked reward (usable for evaluation but
/// not for derivative-based solvers).
class NewsvendorModel final : public RewardModel {
  public:
    NewsvendorModel(double revenue, double cost, double eps)
        : r_(revenue), c_(cost), eps_(eps) {
        if (!(revenue > cost && cost > 0))
            throw ArgumentError("NewsvendorModel: need r > c > 0");
        if (eps < 0) throw ArgumentError("NewsvendorModel: eps must be >= 0");
    }

    int dim_x() const override { return 1; }
    double revenue() const { return r_; }
    double cost() const { return c_; }
    double smoothing() const { return eps_; }

    double value(const Vector& x, const Vector& y) const override {
        return r_ * smoothed_min(x[0], y[0], eps_) - c_ * x[0];
    }

    Vector gradient(const Vector& x, const Vector& y) const override {
        Vector g(1);
        const double w = (eps_ == 0.0) ? (x[0] <= y[0] ? 1.0 : 0.0)
                                       : sigmoid((y[0] - x[0]) / eps_);
        g[0] = r_ * w - c_;
        return g;
    }

    Matrix hessian(const Vector& x, const Vector& y) const override {
        Matrix h(1, 1);
        if (eps_ == 0.0) {
            h(0, 0) = 0.0;
        } else {
            const double w = sigmoid((y[0] - x[0]) / eps_);
            h(0, 0) = r_ * w * (w - 1.0) / eps_;
        }
        return h;
    }

    Vector initial_point(const EmpiricalDistribution& dist) const override {
        Vector x(1);
        x[0] = dist.weights.dot(dist.samples.col(0));
        return x;
    }

    /// Exact maximizer of the unsmoothed empirical objective. The objective
    /// is piecewise linear with kinks at the order statistics and is
    /// maximized where the cumulative weight first reaches the critical
    /// fractile (r - c)/r; ties (flat optimal segments) resolve to the
    /// largest maximizing order statistic.
    static double exact_empirical_order_quantity(double revenue, double cost,
                                                 const EmpiricalDistribution& dist) {
        if (!(revenue > cost && cost > 0))
            throw ArgumentError("exact_empirical_order_quantity: need r > c > 0");
        const Eigen::Index n = dist.size();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return dist.samples(a, 0) < dist.samples(b, 0);
        });
        double below_sum = 0.0;   // sum_{i <= k} w_i * Y_i
        double below_w = 0.0;     // cumulative weight
        double best_val = -kInf, best_x = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Eigen::Index i = order[static_cast<std::size_t>(k)];
            const double y = dist.samples(i, 0);
            const double w = dist.weights[i];
            below_sum += w * y;
            below_w += w;
            const double val = revenue * (below_sum + y * (1.0 - below_w)) - cost * y;
            if (val >= best_val - 1e-12 * (1.0 + std::abs(best_val))) {
                if (val > best_val) best_val = val;
                best_x = y;  // right endpoint on ties
            }
        }
        return best_x;
    }

  private:
    double r_, c_, eps_;
};

/// Exponential utility of portfolio return, f(x, R) = -exp(-gamma R'x).
class ExpUtilityModel final : public RewardModel {
  public:
    ExpUtilityModel(double gamma, int dim,
                    FeasibleSet feasible = FeasibleSet::unconstrained())
        : gamma_(gamma), dim_(dim), feasible_(std::move(feasible)) {
        if (!(gamma > 0)) throw ArgumentError("ExpUtilityModel: gamma must be positive");
        if (dim < 1) throw ArgumentError("ExpUtilityModel: dim must be >= 1");
        if (feasible_.kind == FeasibleSet::Kind::BoxBudget &&
            feasible_.lo.size() != dim)
            throw ArgumentError("ExpUtilityModel: feasible set dimension mismatch");
    }

    int dim_x() const override { return dim_; }
    double gamma() const { return gamma_; }
    const FeasibleSet& feasible_set() const override { return feasible_; }

    double value(const Vector& x, const Vector& y) const override {
        return -std::exp(-gamma_ * y.dot(x));
    }

    Vector gradient(const Vector& x, const Vector& y) const override {
        return gamma_ * std::exp(-gamma_ * y.dot(x)) * y;
    }

    Matrix hessian(const Vector& x, const Vector& y) const override {
        return (-gamma_ * gamma_ * std::exp(-gamma_ * y.dot(x))) * (y * y.transpose());
    }

    Vector initial_point(const EmpiricalDistribution&) const override {
        if (feasible_.kind == FeasibleSet::Kind::BoxBudget)
            return feasible_.project(
                Vector::Constant(dim_, feasible_.budget / static_cast<double>(dim_)));
        return Vector::Zero(dim_);
    }

  private:
    double gamma_;
    int dim_;
    FeasibleSet feasible_;
};

/// Log-likelihood reward for binary classification,
/// f((x, x0), (Y, Z)) = -log(1 + exp(-Y (x'Z + x0))), Y in {-1, +1}.
/// The decision vector stacks the coefficients first and the intercept
/// last; a sample row stacks the label first and the covariates after it.
class LogisticModel final : public RewardModel {
  public:
    explicit LogisticModel(int covariate_dim) : d_(covariate_dim) {
        if (covariate_dim < 0)
            throw ArgumentError("LogisticModel: covariate dim must be >= 0");
    }

    int dim_x() const override { return d_ + 1; }
    int covariate_dim() const { return d_; }

    double value(const Vector& x, const Vector& y) const override {
        return -softplus(-margin(x, y));
    }

    Vector gradient(const Vector& x, const Vector& y) const override {
        const double t = margin(x, y);
        const double s = 1.0 - sigmoid(t);
        Vector g(d_ + 1);
        g.head(d_) = (s * y[0]) * y.tail(d_);
        g[d_] = s * y[0];
        return g;
    }

    Matrix hessian(const Vector& x, const Vector& y) const override {
        const double t = margin(x, y);
        const double s = sigmoid(t);
        Vector zext(d_ + 1);
        zext.head(d_) = y.tail(d_);
        zext[d_] = 1.0;
        return (-s * (1.0 - s)) * (zext * zext.transpose());
    }

  private:
    double margin(const Vector& x, const Vector& y) const {
        const double label = y[0];
        if (std::abs(std::abs(label) - 1.0) > 1e-12)
            throw ArgumentError("LogisticModel: label must be -1 or +1");
        return label * (y.tail(d_).dot(x.head(d_)) + x[d_]);
    }

    int d_;
};

}  // namespace dromv
