// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Run from the repository root (the shipped data files are
// resolved relative to it):
//
//   ./build/tests/acceptance            all criteria
//   ./build/tests/acceptance 3 7 9      a subset
//
// Runtime-limited criteria fail when they exceed their stated budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dromv/dromv.hpp"
#include "naive_frontier.hpp"
#include "oracle_helpers.hpp"

using namespace dromv;

namespace {

constexpr std::uint64_t kSeed = 20260808;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
Outcome duality_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(kSeed);
    double worst_err = 0.0;
    int count = 0;
    for (const auto& phi :
         {PhiDivergence::relative_entropy(), PhiDivergence::modified_chi_square()}) {
        for (int rep = 0; rep < 60; ++rep) {
            const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_int(3));
            Vector f(n), p(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                f[i] = 4.0 * rng.uniform() - 2.0;
                p[i] = rng.uniform() + 0.05;
            }
            p /= p.sum();
            const double delta = 0.1 + 3.0 * rng.uniform();
            const double dual = worst_case_rewards(f, p, delta, phi).value;
            const double brute = oracle::worst_case_simplex_oracle(f, p, delta, phi);
            worst_err = std::max(worst_err, std::abs(dual - brute));
            ++count;
        }
    }
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = worst_err <= 1e-5 && elapsed < 10.0;
    o.detail = std::to_string(count) + " instances, max |dual - brute force| = " +
               fmt(worst_err) + ", " + fmt(elapsed) + " s";
    return o;
}

// ---------------------------------------------------------------- criterion 2
Outcome expansion_order() {
    const auto kl = PhiDivergence::relative_entropy();
    const double scale = 0.7 * 10.0 + 0.3 * 100.0;
    const NewsvendorModel nv(30.0, 2.0, 1e-3 * scale);
    const auto dgm = make_exponential_mixture_dgm(10.0, 100.0, 0.7);
    const auto data = sample_empirical(dgm, 50, RngSeed{kSeed});
    Vector x(1);
    x[0] = 30.0;
    const auto [mean, var] = model_reward_stats(nv, x, data);
    auto remainder = [&](double delta) {
        const auto wc = worst_case(nv, x, data, delta, kl);
        return std::abs(wc.value - (mean - delta / (2.0 * kl.phi2_1) * var)) / delta;
    };
    const double r_coarse = remainder(1e-1);
    const double r_fine = remainder(1e-3);
    Outcome o;
    o.pass = r_coarse >= 5.0 * r_fine;
    o.detail = "remainder/delta fell from " + fmt(r_coarse) + " to " + fmt(r_fine) +
               " (factor " + fmt(r_coarse / r_fine) + ", need >= 5)";
    return o;
}

// ---------------------------------------------------------------- criterion 3
Outcome bias_formula() {
    const auto kl = PhiDivergence::relative_entropy();
    const double h = 1e-3;
    Outcome o;
    o.pass = true;

    {
        QuadraticToyModel toy(1);
        const auto dist = EmpiricalDistribution::from_scalars({0.0, 0.0, 3.0});
        const auto s = summarize(toy, dist, kl);
        const auto xp = detail::solve_on_path(toy, dist, kl, h, s.x_star, -s.reward_mean);
        const auto xm = detail::solve_on_path(toy, dist, kl, -h, s.x_star, -s.reward_mean);
        const double slope = (xp.first[0] - xm.first[0]) / (2.0 * h);
        const double rel = std::abs(slope - s.pi[0]) / std::abs(s.pi[0]);
        const double vs_analytic = std::abs(s.pi[0] - 1.0);
        o.pass = o.pass && rel <= 0.02 && vs_analytic <= 1e-6;
        o.detail += "toy: pi = " + fmt(s.pi[0]) + " (analytic 1), slope error " +
                    fmt(100.0 * rel) + "%";
    }
    {
        ExpUtilityModel m(1.0, 3);
        Rng rng(660911);
        Matrix samples(200, 3);
        for (Eigen::Index i = 0; i < 200; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                samples(i, j) = 0.02 + 0.01 * static_cast<double>(j) + 0.08 * rng.normal();
        const EmpiricalDistribution dist(std::move(samples));
        const auto s = summarize(m, dist, kl);
        const auto xp = detail::solve_on_path(m, dist, kl, h, s.x_star, -s.reward_mean);
        const auto xm = detail::solve_on_path(m, dist, kl, -h, s.x_star, -s.reward_mean);
        const Vector slope = (xp.first - xm.first) / (2.0 * h);
        const double rel = (slope - s.pi).norm() / s.pi.norm();
        o.pass = o.pass && rel <= 0.05;
        o.detail += "; 3-asset: |pi| = " + fmt(s.pi.norm()) + ", slope error " +
                    fmt(100.0 * rel) + "%";
    }
    return o;
}

// ---------------------------------------------------------------- criterion 4
Outcome headline_orders() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto kl = PhiDivergence::relative_entropy();
    QuadraticToyModel toy(1);
    const auto dist = EmpiricalDistribution::from_scalars({0.0, 0.0, 3.0});
    const auto [mean0, var0] =
        model_reward_stats(toy, empirical_optimize(toy, dist), dist);
    std::vector<double> ld, lm, lv;
    for (double delta : {0.0025, 0.005, 0.01, 0.02, 0.04}) {
        const auto sol = robust_optimize(toy, dist, delta, kl);
        const auto [mu, v] = model_reward_stats(toy, sol.x, dist);
        ld.push_back(std::log(delta));
        lm.push_back(std::log(std::abs(mu - mean0)));
        lv.push_back(std::log(std::abs(v - var0)));
    }
    const double slope_mean = oracle::ols_slope(ld, lm);
    const double slope_var = oracle::ols_slope(ld, lv);
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = std::abs(slope_mean - 2.0) <= 0.3 && std::abs(slope_var - 1.0) <= 0.2 &&
             elapsed < 60.0;
    o.detail = "slope(|dmean|) = " + fmt(slope_mean) + " (2.0 +/- 0.3), slope(|dvar|) = " +
               fmt(slope_var) + " (1.0 +/- 0.2), " + fmt(elapsed) + " s";
    return o;
}

// ---------------------------------------------------------------- criterion 5
Outcome jensen_term() {
    const auto t0 = std::chrono::steady_clock::now();
    QuadraticToyModel toy(1);
    Matrix atoms(3, 1);
    atoms << 0.0, 0.0, 3.0;
    const auto dgm = make_discrete_dgm(atoms, Vector::Constant(3, 1.0 / 3.0));
    const int n = 50, reps = 100000;
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto data = sample_empirical(dgm, n, RngSeed{derive_seed(kSeed, r)});
        const Vector xn = empirical_optimize(toy, data);
        acc += -0.5 * ((xn[0] - 1.0) * (xn[0] - 1.0) + 2.0);  // exact E_P f(xn)
    }
    const double gap = acc / reps - (-1.0);  // E_P f(x*) = -1
    const double target = -1.0 / n;
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = std::abs(gap - target) <= 0.2 * std::abs(target) && elapsed < 120.0;
    o.detail = "E[f(x_n)] - E[f(x*)] = " + fmt(gap) + " vs -1/n = " + fmt(target) +
               " (K = 1e5), " + fmt(elapsed) + " s";
    return o;
}

// ---------------------------------------------------------------- criterion 6
Outcome frontier_gap_decay() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    cfg.experiment = "newsvendor";
    cfg.seed = kSeed;
    cfg.repeats_K = 10000;

    const auto kl = PhiDivergence::relative_entropy();
    const auto grid = cfg.resolved_grid();
    const double scale =
        cfg.nv_mix_low * cfg.nv_mean_low + (1.0 - cfg.nv_mix_low) * cfg.nv_mean_high;
    const NewsvendorModel model(cfg.nv_revenue, cfg.nv_cost, cfg.nv_smoothing_rel * scale);
    const auto dgm =
        make_exponential_mixture_dgm(cfg.nv_mean_low, cfg.nv_mean_high, cfg.nv_mix_low);
    const auto ref =
        sample_empirical(dgm, cfg.dgm_samples, RngSeed{derive_seed(cfg.seed, 1001)});
    const auto truth = true_frontier(model, ref, kl, grid);

    std::vector<double> gaps;
    for (int n : {10, 30, 50}) {
        const auto oos = oos_frontier(model, dgm, n, cfg.repeats_K, kl, grid,
                                      RngSeed{derive_seed(cfg.seed, 2000 + n)});
        gaps.push_back(detail::frontier_gap(oos, truth));
    }
    const double ratio = gaps[0] / gaps[2];
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = gaps[0] > gaps[1] && gaps[1] > gaps[2] && ratio >= 2.5 && ratio <= 10.0 &&
             elapsed < 600.0;
    o.detail = "gap(10) = " + fmt(gaps[0]) + " > gap(30) = " + fmt(gaps[1]) +
               " > gap(50) = " + fmt(gaps[2]) + ", ratio " + fmt(ratio) +
               " in [2.5, 10], " + fmt(elapsed) + " s";
    return o;
}

// ---------------------------------------------------------------- criterion 7
Outcome algorithm1_exactness() {
    const auto kl = PhiDivergence::relative_entropy();
    QuadraticToyModel toy(1);
    Matrix atoms(3, 1);
    atoms << 0.0, 0.0, 3.0;
    const auto dgm = make_discrete_dgm(atoms, Vector::Constant(3, 1.0 / 3.0));
    const auto dist = sample_empirical(dgm, 12, RngSeed{8911});
    const std::vector<double> grid = {0.0, 0.25, 0.7, 1.4, 3.0};
    const int k = 50;
    const auto a = bootstrap_frontier(toy, dist, kl, grid, k, RngSeed{kSeed});
    const auto b = oracle::naive_bootstrap_frontier(toy, dist, kl, grid, k, kSeed);
    bool identical = a.points.size() == b.points.size();
    for (std::size_t i = 0; identical && i < a.points.size(); ++i)
        identical = a.points[i].delta == b.points[i].delta &&
                    a.points[i].mu == b.points[i].mu &&
                    a.points[i].sigma2 == b.points[i].sigma2;
    Outcome o;
    o.pass = identical;
    o.detail = identical ? "bit-identical to the naive re-implementation (k = 50, 5 deltas)"
                         : "MISMATCH against the naive re-implementation";
    return o;
}

// ---------------------------------------------------------------- criterion 8
Outcome calibration_monotonicity() {
    const auto kl = PhiDivergence::relative_entropy();
    CsvOptions copt;
    const auto table = ingest_returns_csv("data/synthetic_returns.csv", copt);
    const auto d = static_cast<int>(table.returns.cols());
    const auto train = returns_window(table, "196804", "197206");
    const ExpUtilityModel model(1.0, d,
                                FeasibleSet::box_budget(Vector::Constant(d, -1.0),
                                                        Vector::Constant(d, 1.0), 1.0));
    Frontier dummy;
    dummy.points = {{0.0, 0.0, 0.0, 0, 0}};
    CalibrationContext ctx{&model, &train, &kl, RngSeed{derive_seed(kSeed, 2)}, 50, {}};
    const double d10 = calibrate(dummy, HighConfidence{0.10}, &ctx);
    const double d05 = calibrate(dummy, HighConfidence{0.05}, &ctx);
    const double d01 = calibrate(dummy, HighConfidence{0.01}, &ctx);
    Outcome o;
    o.pass = d01 > d05 && d05 > d10 && d10 > 0;
    o.detail = "delta_alpha = (" + fmt(d10) + ", " + fmt(d05) + ", " + fmt(d01) +
               ") for alpha = (0.10, 0.05, 0.01); ordering holds" +
               " [diagnostic: reference values on the original 50-month window are"
               " (55, 58, 63); data-dependent, not gated]";
    return o;
}

// ---------------------------------------------------------------- criterion 9
Outcome wdbc_qualitative() {
    const auto kl = PhiDivergence::relative_entropy();
    // the real file can be dropped in as data/wdbc.csv via scripts/fetch_wdbc.sh;
    // the shipped synthetic stand-in has the same shape and signal layout
    const std::string path = std::filesystem::exists("data/wdbc.csv")
                                 ? "data/wdbc.csv"
                                 : "data/synthetic_wdbc.csv";
    CsvOptions sub;
    for (int j = 1; j <= 10; ++j) sub.column_subset.push_back(j);  // first 10 covariates
    const auto table = ingest_labeled_csv(path, sub);
    const auto train = labeled_to_distribution(table, 0, (table.labels.size() + 1) / 2);
    const LogisticModel model(static_cast<int>(table.covariates.cols()));
    const std::vector<double> grid = {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    const auto boot = bootstrap_frontier(model, train, kl, grid, 25, RngSeed{kSeed});
    const double dstar = calibrate(boot, MaxMean{});
    double var0 = boot.points.front().sigma2, var_star = var0;
    for (const auto& p : boot.points)
        if (p.delta == dstar) var_star = p.sigma2;
    const double ratio = var_star / var0;
    Outcome o;
    o.pass = dstar > 0.0 && dstar <= 1.0 && ratio <= 0.8;
    o.detail = std::string("data = ") + path + ", delta* = " + fmt(dstar) +
               " (need (0, 1]), variance ratio at delta* = " + fmt(ratio) +
               " (need <= 0.8)";
    return o;
}

// --------------------------------------------------------------- criterion 10
Outcome gradient_hessian_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(kSeed);
    double worst = 0.0;
    bool pass = true;

    auto check = [&](const RewardModel& model, const std::function<Vector(Rng&)>& draw_x,
                     const std::function<Vector(Rng&)>& draw_y, double step) {
        for (int rep = 0; rep < 100; ++rep) {
            const Vector x = draw_x(rng);
            const Vector y = draw_y(rng);
            const Vector g = model.gradient(x, y);
            const Vector g_fd = oracle::fd_gradient(
                [&](const Vector& xx) { return model.value(xx, y); }, x, step);
            const double ge = (g - g_fd).norm();
            pass = pass && ge <= std::max(1e-6, 1e-4 * g.norm());
            const Matrix h = model.hessian(x, y);
            const Matrix h_fd = oracle::fd_jacobian(
                [&](const Vector& xx) { return model.gradient(xx, y); }, x, step);
            const double he = (h - h_fd).norm();
            pass = pass && he <= std::max(1e-6, 1e-4 * h.norm());
            worst = std::max({worst, ge, he});
        }
    };

    NewsvendorModel nv(30.0, 2.0, 0.1);
    check(nv, [](Rng& r) { return Vector::Constant(1, 20.0 * r.uniform()); },
          [](Rng& r) { return Vector::Constant(1, 20.0 * r.uniform()); }, 1e-6);
    ExpUtilityModel eu(1.0, 3);
    check(eu,
          [](Rng& r) {
              Vector x(3);
              for (int i = 0; i < 3; ++i) x[i] = 2.0 * r.uniform() - 1.0;
              return x;
          },
          [](Rng& r) {
              Vector y(3);
              for (int i = 0; i < 3; ++i) y[i] = 0.1 * r.normal();
              return y;
          },
          1e-5);
    LogisticModel lm(3);
    check(lm,
          [](Rng& r) {
              Vector x(4);
              for (int i = 0; i < 4; ++i) x[i] = 2.0 * r.normal();
              return x;
          },
          [](Rng& r) {
              Vector y(4);
              y[0] = r.uniform() < 0.5 ? -1.0 : 1.0;
              for (int i = 1; i < 4; ++i) y[i] = r.normal();
              return y;
          },
          1e-5);

    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = pass && elapsed < 5.0;
    o.detail = "3 models x 100 points, worst finite-difference gap " + fmt(worst) + ", " +
               fmt(elapsed) + " s";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"duality oracle (dual = brute-force simplex, both divergences)", duality_oracle},
        {"mean-variance expansion order on the smoothed newsvendor", expansion_order},
        {"bias formula pi vs finite-difference solution slope", bias_formula},
        {"headline scaling: mean second order, variance first order", headline_orders},
        {"Jensen term -1/n at n = 50 over 1e5 Monte-Carlo repeats", jensen_term},
        {"newsvendor frontier gap decay over n = 10/30/50", frontier_gap_decay},
        {"Algorithm 1 bit-exact vs naive re-implementation", algorithm1_exactness},
        {"high-confidence calibration monotone in alpha", calibration_monotonicity},
        {"labeled-data qualitative reproduction (max-mean at delta > 0)", wdbc_qualitative},
        {"gradient/Hessian finite-difference suite", gradient_hessian_suite},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), id) == selected.end())
            continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s criterion %2d: %s — %s\n", o.pass ? "PASS" : "FAIL", id,
                    criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
