#pragma once

#include <algorithm>
#include <filesystem>

#include "dromv/asymptotics.hpp"
#include "dromv/config.hpp"
#include "dromv/csv.hpp"
#include "dromv/frontier.hpp"
#include "dromv/models.hpp"

namespace dromv {

namespace detail {

inline void write_meta(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                       const std::vector<std::string>& artifacts) {
    nlohmann::json j;
    j["config"] = cfg.to_json();
    j["artifacts"] = artifacts;
    std::ofstream out(dir / "meta.json");
    if (!out) throw DataError("cannot write meta.json under " + dir.string());
    out << j.dump(2) << "\n";
}

inline std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// largest per-axis-normalized distance between matching grid points of a
// frontier and the reference frontier
inline double frontier_gap(const Frontier& f, const Frontier& ref) {
    if (f.points.size() != ref.points.size())
        throw ArgumentError("frontier_gap: grids differ");
    double mu_lo = kInf, mu_hi = -kInf, s2_lo = kInf, s2_hi = -kInf;
    for (const auto& p : ref.points) {
        mu_lo = std::min(mu_lo, p.mu);
        mu_hi = std::max(mu_hi, p.mu);
        s2_lo = std::min(s2_lo, p.sigma2);
        s2_hi = std::max(s2_hi, p.sigma2);
    }
    const double mu_scale = (mu_hi > mu_lo) ? mu_hi - mu_lo : 1.0;
    const double s2_scale = (s2_hi > s2_lo) ? s2_hi - s2_lo : 1.0;
    double gap = 0.0;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
        const double dm = (f.points[i].mu - ref.points[i].mu) / mu_scale;
        const double dv = (f.points[i].sigma2 - ref.points[i].sigma2) / s2_scale;
        gap = std::max(gap, std::hypot(dm, dv));
    }
    return gap;
}

inline void write_named_frontier(const Frontier& f, const std::filesystem::path& dir,
                                 const std::string& name,
                                 std::vector<std::string>& artifacts) {
    write_frontier_csv(f, (dir / (name + ".csv")).string());
    write_frontier_meta_json(f, (dir / (name + ".meta.json")).string());
    artifacts.push_back(name + ".csv");
}

}  // namespace detail

/// Newsvendor simulation study under the two-regime exponential demand
/// model: the reference ("true") frontier from a large stand-in sample, the
/// Monte-Carlo out-of-sample frontier for each configured n, the gap decay
/// table, and normalized bootstrap-vs-out-of-sample frontier pairs.
inline void run_newsvendor_suite(const ExperimentConfig& cfg) {
    const auto dir = detail::prepare_out_dir(cfg);
    const auto phi = cfg.make_phi();
    const auto grid = cfg.resolved_grid();
    const double demand_scale =
        cfg.nv_mix_low * cfg.nv_mean_low + (1.0 - cfg.nv_mix_low) * cfg.nv_mean_high;
    const NewsvendorModel model(cfg.nv_revenue, cfg.nv_cost,
                                cfg.nv_smoothing_rel * demand_scale);
    const auto dgm =
        make_exponential_mixture_dgm(cfg.nv_mean_low, cfg.nv_mean_high, cfg.nv_mix_low);

    FrontierOptions opts;
    opts.solve = cfg.solve;
    opts.threads = cfg.threads;

    std::vector<std::string> artifacts;
    const auto ref = sample_empirical(dgm, cfg.dgm_samples,
                                      RngSeed{derive_seed(cfg.seed, 1001)});
    const auto truth = true_frontier(model, ref, phi, grid, opts);
    detail::write_named_frontier(truth, dir, "true_frontier", artifacts);

    std::vector<std::pair<int, double>> gaps;
    for (int n : cfg.n_list) {
        const auto oos = oos_frontier(model, dgm, n, cfg.repeats_K, phi, grid,
                                      RngSeed{derive_seed(cfg.seed, 2000 + n)}, opts);
        detail::write_named_frontier(oos, dir, "oos_frontier_n" + std::to_string(n),
                                     artifacts);
        gaps.emplace_back(n, detail::frontier_gap(oos, truth));

        const auto data =
            sample_empirical(dgm, n, RngSeed{derive_seed(cfg.seed, 3000 + n)});
        const auto boot = bootstrap_frontier(model, data, phi, grid, cfg.bootstrap_k,
                                             RngSeed{derive_seed(cfg.seed, 4000 + n)}, opts);
        detail::write_named_frontier(normalize_frontier(boot), dir,
                                     "normalized_bootstrap_n" + std::to_string(n),
                                     artifacts);
        detail::write_named_frontier(normalize_frontier(oos), dir,
                                     "normalized_oos_n" + std::to_string(n), artifacts);
    }

    std::FILE* gt = std::fopen((dir / "gap_table.csv").c_str(), "w");
    if (!gt) throw DataError("cannot write gap_table.csv");
    std::fprintf(gt, "n,gap\n");
    for (const auto& [n, gap] : gaps) std::fprintf(gt, "%d,%.17g\n", n, gap);
    std::fclose(gt);
    artifacts.push_back("gap_table.csv");

    detail::write_meta(cfg, dir, artifacts);
}

/// Portfolio study on a monthly returns table: bootstrap frontier with
/// error bars on the training window, the high-confidence delta_alpha
/// table, and out-of-sample mean/variance of utility on each test window
/// for the grid augmented with the delta_alpha values.
inline void run_portfolio_suite(const ExperimentConfig& cfg) {
    const auto dir = detail::prepare_out_dir(cfg);
    const auto phi = cfg.make_phi();
    const auto grid = cfg.resolved_grid();

    CsvOptions copt;
    copt.percent_to_decimal = cfg.percent_to_decimal;
    const auto table = ingest_returns_csv(cfg.returns_csv, copt);
    const auto d = static_cast<int>(table.returns.cols());
    const auto train = returns_window(table, cfg.train_start, cfg.train_end);

    const ExpUtilityModel model(
        cfg.gamma, d,
        FeasibleSet::box_budget(Vector::Constant(d, cfg.box_lo),
                                Vector::Constant(d, cfg.box_hi), cfg.budget));

    FrontierOptions opts;
    opts.solve = cfg.solve;
    opts.threads = cfg.threads;

    std::vector<std::string> artifacts;
    const auto boot = bootstrap_frontier(model, train, phi, grid, cfg.bootstrap_k,
                                         RngSeed{derive_seed(cfg.seed, 1)}, opts);
    detail::write_named_frontier(boot, dir, "bootstrap_frontier", artifacts);

    // high-confidence mapping alpha -> delta_alpha
    CalibrationContext ctx{&model, &train, &phi, RngSeed{derive_seed(cfg.seed, 2)},
                           cfg.bootstrap_k, cfg.solve};
    std::vector<double> deltas_alpha;
    std::FILE* da = std::fopen((dir / "delta_alpha.csv").c_str(), "w");
    if (!da) throw DataError("cannot write delta_alpha.csv");
    std::fprintf(da, "alpha,delta\n");
    for (double a : cfg.alphas) {
        const double delta = calibrate(boot, HighConfidence{a}, &ctx);
        deltas_alpha.push_back(delta);
        std::fprintf(da, "%.17g,%.17g\n", a, delta);
    }
    std::fclose(da);
    artifacts.push_back("delta_alpha.csv");
    // smaller significance must map to a larger ambiguity radius
    for (std::size_t i = 1; i < cfg.alphas.size(); ++i)
        if (cfg.alphas[i] < cfg.alphas[i - 1] && !(deltas_alpha[i] > deltas_alpha[i - 1]))
            throw SolverError("delta_alpha ordering violated", Vector(), 0.0, 0);

    // evaluate the training-window solutions on each test window
    std::vector<double> eval_grid = grid;
    eval_grid.insert(eval_grid.end(), deltas_alpha.begin(), deltas_alpha.end());
    std::sort(eval_grid.begin(), eval_grid.end());
    eval_grid.erase(std::unique(eval_grid.begin(), eval_grid.end()), eval_grid.end());

    std::vector<std::pair<double, Vector>> solutions;
    for (double delta : eval_grid)
        solutions.emplace_back(delta,
                               robust_optimize(model, train, delta, phi, cfg.solve).x);

    for (const auto& w : cfg.test_windows) {
        const auto parts = KeyValueConfig::split(w, ':');
        if (parts.size() != 2)
            throw ConfigError("test window '" + w + "' must be start:end");
        const auto test = returns_window(table, parts[0], parts[1]);
        Frontier f;
        f.method = "oos_test";
        f.replicates = 0;
        f.data_size = static_cast<int>(test.size());
        for (const auto& [delta, x] : solutions) {
            const auto [mean, var] = model_reward_stats(model, x, test);
            f.points.push_back(FrontierPoint{delta, mean, var, 0.0, 0.0});
        }
        detail::write_named_frontier(f, dir, "oos_test_" + parts[0] + "_" + parts[1],
                                     artifacts);
    }

    detail::write_meta(cfg, dir, artifacts);
}

/// Robust maximum likelihood on a labeled table: bootstrap frontier on the
/// first half of the rows, test-half mean and variance of the per-sample
/// log-likelihood for each grid delta.
inline void run_logistic_suite(const ExperimentConfig& cfg) {
    const auto dir = detail::prepare_out_dir(cfg);
    const auto phi = cfg.make_phi();
    const auto grid = cfg.resolved_grid();

    CsvOptions copt;
    copt.column_subset = cfg.covariate_subset;
    const auto table = ingest_labeled_csv(cfg.labeled_csv, copt);
    const auto n = table.labels.size();
    const Eigen::Index n_train = (n + 1) / 2;
    if (n < 2) throw DataError("logistic suite needs at least two rows");
    const auto train = labeled_to_distribution(table, 0, n_train);
    const auto test = labeled_to_distribution(table, n_train, n);

    const double first = train.samples(0, 0);
    bool two_classes = false;
    for (Eigen::Index i = 1; i < train.samples.rows(); ++i)
        if (train.samples(i, 0) != first) two_classes = true;
    if (!two_classes)
        throw DataError("training half contains a single class; cannot fit");

    const LogisticModel model(static_cast<int>(table.covariates.cols()));

    FrontierOptions opts;
    opts.solve = cfg.solve;
    opts.threads = cfg.threads;

    std::vector<std::string> artifacts;
    const auto boot = bootstrap_frontier(model, train, phi, grid, cfg.bootstrap_k,
                                         RngSeed{derive_seed(cfg.seed, 1)}, opts);
    detail::write_named_frontier(boot, dir, "bootstrap_frontier", artifacts);

    Frontier oos;
    oos.method = "oos_test";
    oos.replicates = 0;
    oos.data_size = static_cast<int>(test.size());
    for (double delta : grid) {
        const auto sol = robust_optimize(model, train, delta, phi, cfg.solve);
        const auto [mean, var] = model_reward_stats(model, sol.x, test);
        oos.points.push_back(FrontierPoint{delta, mean, var, 0.0, 0.0});
    }
    detail::write_named_frontier(oos, dir, "oos_frontier", artifacts);

    detail::write_meta(cfg, dir, artifacts);
}

/// Quadratic toy study: the exact frontier under the configured atom set,
/// the expansion constants, the predicted mean/variance curves at the
/// configured n, plus simulated out-of-sample and bootstrap frontiers.
inline void run_toy_suite(const ExperimentConfig& cfg) {
    const auto dir = detail::prepare_out_dir(cfg);
    const auto phi = cfg.make_phi();
    const auto grid = cfg.resolved_grid();

    const QuadraticToyModel model(1);
    const auto exact = EmpiricalDistribution::from_scalars(
        std::vector<double>(cfg.toy_points.begin(), cfg.toy_points.end()));
    Matrix atoms(exact.size(), 1);
    atoms.col(0) = exact.samples.col(0);
    const auto dgm = make_discrete_dgm(atoms, exact.weights);

    FrontierOptions opts;
    opts.solve = cfg.solve;
    opts.threads = cfg.threads;

    std::vector<std::string> artifacts;
    const auto truth = true_frontier(model, exact, phi, grid, opts);
    detail::write_named_frontier(truth, dir, "true_frontier", artifacts);

    const auto summary = summarize(model, exact, phi);
    {
        nlohmann::json j;
        j["x_star"] = std::vector<double>(summary.x_star.begin(), summary.x_star.end());
        j["mu_f"] = std::vector<double>(summary.mu_f.begin(), summary.mu_f.end());
        j["sigma_f"] = summary.sigma_f(0, 0);
        j["pi"] = std::vector<double>(summary.pi.begin(), summary.pi.end());
        j["xi0"] = summary.xi0(0, 0);
        j["eta0"] = summary.eta0;
        j["kappa0"] = std::vector<double>(summary.kappa0.begin(), summary.kappa0.end());
        j["rho"] = summary.rho;
        j["theta"] = summary.theta;
        std::ofstream out(dir / "asymptotics.json");
        out << j.dump(2) << "\n";
        artifacts.push_back("asymptotics.json");
    }

    const auto curves = predicted_curves(summary, static_cast<double>(cfg.n), grid);
    {
        std::FILE* pc = std::fopen((dir / "predicted_curves.csv").c_str(), "w");
        if (!pc) throw DataError("cannot write predicted_curves.csv");
        std::fprintf(pc, "delta,mean_pred,var_pred\n");
        for (const auto& p : curves)
            std::fprintf(pc, "%.17g,%.17g,%.17g\n", p.delta, p.mean_pred, p.var_pred);
        std::fclose(pc);
        artifacts.push_back("predicted_curves.csv");
    }

    const auto oos = oos_frontier(model, dgm, cfg.n, cfg.repeats_K, phi, grid,
                                  RngSeed{derive_seed(cfg.seed, 2)}, opts);
    detail::write_named_frontier(oos, dir, "oos_frontier", artifacts);

    const auto data = sample_empirical(dgm, cfg.n, RngSeed{derive_seed(cfg.seed, 3)});
    const auto boot = bootstrap_frontier(model, data, phi, grid, cfg.bootstrap_k,
                                         RngSeed{derive_seed(cfg.seed, 4)}, opts);
    detail::write_named_frontier(boot, dir, "bootstrap_frontier", artifacts);

    detail::write_meta(cfg, dir, artifacts);
}

inline void run_suite(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment == "newsvendor") return run_newsvendor_suite(cfg);
    if (cfg.experiment == "portfolio") return run_portfolio_suite(cfg);
    if (cfg.experiment == "logistic") return run_logistic_suite(cfg);
    if (cfg.experiment == "toy") return run_toy_suite(cfg);
    throw ConfigError("unknown experiment: " + cfg.experiment);
}

}  // namespace dromv
