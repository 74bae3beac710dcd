#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dromv/empirical.hpp"
#include "dromv/models.hpp"
#include "dromv/optimize.hpp"

using namespace dromv;

TEST_CASE("bootstrap of a single sample returns that sample") {
    auto dist = EmpiricalDistribution::from_scalars({42.0});
    const auto r = bootstrap_resample(dist, RngSeed{123});
    CHECK(r.size() == 1);
    CHECK(r.samples(0, 0) == 42.0);
}

TEST_CASE("bootstrap is deterministic in the seed") {
    auto dist = EmpiricalDistribution::from_scalars({1.0, 2.0, 3.0, 4.0, 5.0});
    const auto a = bootstrap_resample(dist, RngSeed{777});
    const auto b = bootstrap_resample(dist, RngSeed{777});
    CHECK(a.samples == b.samples);
    const auto c = bootstrap_resample(dist, RngSeed{778});
    CHECK(a.samples != c.samples);  // overwhelmingly likely for n = 5
}

TEST_CASE("bootstrap sample means concentrate at the data mean") {
    auto dist = EmpiricalDistribution::from_scalars({0.0, 1.0});
    const int reps = 10000;
    double acc = 0.0;
    for (int j = 0; j < reps; ++j) {
        const auto r = bootstrap_resample(dist, RngSeed{derive_seed(5150, j)});
        acc += r.samples.col(0).mean();
    }
    const double mean_of_means = acc / reps;
    // sd of one resample mean is 0.5/sqrt(2); CLT bound at 3 sigma
    CHECK(std::abs(mean_of_means - 0.5) <= 3.0 * 0.5 / std::sqrt(2.0 * reps));
}

TEST_CASE("bootstrap argument errors") {
    CHECK_THROWS_AS(bootstrap_resample(EmpiricalDistribution{}, RngSeed{1}), ArgumentError);
    Matrix s(2, 1);
    s << 1.0, 2.0;
    Vector w(2);
    w << 0.3, 0.7;
    CHECK_THROWS_AS(bootstrap_resample(EmpiricalDistribution(s, w), RngSeed{1}),
                    ArgumentError);
}

TEST_CASE("empirical newsvendor solution sits at the critical-fractile order statistic") {
    auto dist = EmpiricalDistribution::from_scalars({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const double x = NewsvendorModel::exact_empirical_order_quantity(30.0, 2.0, dist);
    CHECK(x == doctest::Approx(10.0));
    // brute force: the piecewise-linear objective increases up to the last
    // order statistic for this fractile
    auto objective = [&](double xx) {
        double v = 0.0;
        for (int i = 1; i <= 10; ++i) v += 30.0 * std::min(xx, double(i)) / 10.0;
        return v - 2.0 * xx;
    };
    for (int i = 1; i < 10; ++i) CHECK(objective(i) < objective(i + 1));
}

TEST_CASE("newsvendor order-statistic ties resolve to the right endpoint") {
    // r = 2, c = 1 puts the critical fractile at exactly 0.5, so the
    // objective is flat on [1, 3]; the rule returns the largest maximizer
    auto dist = EmpiricalDistribution::from_scalars({1.0, 3.0});
    CHECK(NewsvendorModel::exact_empirical_order_quantity(2.0, 1.0, dist) == 3.0);
}

TEST_CASE("quadratic toy empirical optimum is the weighted mean") {
    QuadraticToyModel toy(1);
    auto dist = EmpiricalDistribution::from_scalars({0.0, 0.0, 3.0});
    const Vector x = empirical_optimize(toy, dist);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-8));

    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix s(5, 1);
        Vector w(5);
        for (int i = 0; i < 5; ++i) {
            s(i, 0) = 10.0 * rng.uniform() - 5.0;
            w[i] = rng.uniform() + 0.1;
        }
        w /= w.sum();
        EmpiricalDistribution d(s, w);
        const Vector xw = empirical_optimize(toy, d);
        CHECK(std::abs(xw[0] - w.dot(s.col(0))) <= 1e-8);
    }
}

TEST_CASE("empirical_optimize is invariant to sample order") {
    NewsvendorModel nv(30.0, 2.0, 0.05);
    std::vector<double> demands = {3.1, 0.4, 9.7, 2.2, 5.5, 7.3, 1.9, 8.8};
    auto d1 = EmpiricalDistribution::from_scalars(demands);
    std::reverse(demands.begin(), demands.end());
    auto d2 = EmpiricalDistribution::from_scalars(demands);
    const Vector x1 = empirical_optimize(nv, d1);
    const Vector x2 = empirical_optimize(nv, d2);
    CHECK(x1[0] == doctest::Approx(x2[0]).epsilon(1e-10));
}

TEST_CASE("empirical solutions converge to the population optimum as n grows") {
    // known mixture data-generating model; the population optimum is the
    // mixture quantile at the critical fractile, found here by bisection
    const double r = 30.0, c = 2.0, fractile = (r - c) / r;
    auto mixture_cdf = [](double x) {
        return 0.7 * (1.0 - std::exp(-x / 10.0)) + 0.3 * (1.0 - std::exp(-x / 100.0));
    };
    double lo = 0.0, hi = 2000.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mixture_cdf(mid) < fractile ? lo : hi) = mid;
    }
    const double x_star = 0.5 * (lo + hi);

    const auto dgm = make_exponential_mixture_dgm(10.0, 100.0, 0.7);
    auto median_error = [&](Eigen::Index n) {
        std::vector<double> errs;
        for (int rep = 0; rep < 201; ++rep) {
            const auto data = sample_empirical(dgm, n, RngSeed{derive_seed(88, 1000 * n + rep)});
            const double xn = NewsvendorModel::exact_empirical_order_quantity(r, c, data);
            errs.push_back(std::abs(xn - x_star));
        }
        std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
        return errs[errs.size() / 2];
    };
    const double e50 = median_error(50), e100 = median_error(100), e200 = median_error(200);
    CHECK(e100 < e50);
    CHECK(e200 < e100);
}

TEST_CASE("separable logistic data: reward runs to 0- and the cap path is graceful") {
    // the population MLE diverges here; the solver rides the coefficients out
    // until the gradient underflows against the relative criterion, returning
    // a large finite iterate with training reward just below zero
    LogisticModel m(1);
    Matrix s(4, 2);
    s << 1.0, 1.0, 1.0, 2.0, -1.0, -1.0, -1.0, -2.0;
    EmpiricalDistribution dist(s);
    const auto res = empirical_optimize_detailed(m, dist);
    CHECK(res.x.norm() > 10.0);
    CHECK(res.value < 0.0);
    CHECK(res.value > -1e-6);

    // with an iteration budget too small to get there, the diagnostic error
    // carries the last iterate
    SolveOptions opts;
    opts.max_iter = 1;
    try {
        empirical_optimize(m, dist, opts);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.last_iterate.size() == 2);
        CHECK(e.iterations == 1);
        CHECK(e.residual > 0.0);
    }
}
