#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dromv/robust.hpp"

namespace dromv {

struct FrontierPoint {
    double delta = 0.0;
    double mu = 0.0;
    double sigma2 = 0.0;
    double mu_sd = 0.0;
    double sigma2_sd = 0.0;
};

/// Out-of-sample mean-variance frontier {(delta, mu(delta), sigma2(delta))}
/// with per-point dispersion for error bars.
struct Frontier {
    std::vector<FrontierPoint> points;
    int replicates = 0;       // k (bootstrap) or K (simulation)
    int data_size = 0;        // n
    std::string method;       // bootstrap | oos_simulation | oos_test | true_frontier

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].sigma2 < 0)
                throw ArgumentError("Frontier: negative variance");
            if (i > 0 && !(points[i].delta > points[i - 1].delta))
                throw ArgumentError("Frontier: deltas must be strictly increasing");
        }
    }
};

struct FrontierOptions {
    SolveOptions solve;
    int threads = 1;
    double max_dropped_frac = 0.10;  // replicate failure budget
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ArgumentError("frontier: empty delta grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0) throw ArgumentError("frontier: negative delta");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw ArgumentError("frontier: delta grid must be strictly increasing");
    }
}

template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
    threads = std::max(1, std::min<int>(threads, count));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i; (i = next.fetch_add(1)) < count;) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Bootstrap estimate of the out-of-sample mean-variance frontier.
///
/// For each replicate j: resample the data, solve the robust problem on the
/// resample for every grid point, and evaluate the mean m_j and variance
/// v_j of the resulting decision under the ORIGINAL empirical distribution.
/// Aggregation per grid point:
///
///   mu      = (1/k) sum_j m_j
///   sigma2  = (1/k) sum_j v_j + (1/(k-1)) sum_j (m_j - mu)^2
///
/// (the between-replicate term is dropped at k = 1). mu_sd and sigma2_sd
/// are across-replicate standard deviations of m_j and v_j. A replicate
/// whose solve fails is recorded and dropped; more than max_dropped_frac of
/// them is an error. Results are a pure function of (inputs, seed): the
/// per-replicate seed is derive_seed(seed, j) regardless of thread count.
inline Frontier bootstrap_frontier(const RewardModel& model,
                                   const EmpiricalDistribution& dist,
                                   const PhiDivergence& phi,
                                   const std::vector<double>& delta_grid, int k,
                                   RngSeed seed, const FrontierOptions& opts = {}) {
    detail::check_grid(delta_grid);
    if (k < 1) throw ArgumentError("bootstrap_frontier: k must be >= 1");
    if (!dist.uniform_weights())
        throw ArgumentError("bootstrap_frontier: data weights must be uniform");
    const auto g = delta_grid.size();

    std::vector<std::vector<double>> m(static_cast<std::size_t>(k)),
        v(static_cast<std::size_t>(k));
    std::vector<char> ok(static_cast<std::size_t>(k), 0);

    detail::parallel_for(k, opts.threads, [&](int j) {
        const auto ju = static_cast<std::size_t>(j);
        try {
            const auto replicate =
                bootstrap_resample(dist, RngSeed{derive_seed(seed.value, ju)});
            std::vector<double> mj(g), vj(g);
            for (std::size_t i = 0; i < g; ++i) {
                const auto sol =
                    robust_optimize(model, replicate, delta_grid[i], phi, opts.solve);
                const auto [mean, var] = model_reward_stats(model, sol.x, dist);
                mj[i] = mean;
                vj[i] = var;
            }
            m[ju] = std::move(mj);
            v[ju] = std::move(vj);
            ok[ju] = 1;
        } catch (const SolverError&) {
            ok[ju] = 0;  // dropped
        }
    });

    int kept = 0;
    for (int j = 0; j < k; ++j) kept += ok[static_cast<std::size_t>(j)];
    if (k - kept > opts.max_dropped_frac * k)
        throw SolverError("bootstrap_frontier: " + std::to_string(k - kept) + " of " +
                              std::to_string(k) + " replicates failed",
                          Vector(), 0.0, 0);

    Frontier f;
    f.method = "bootstrap";
    f.replicates = kept;
    f.data_size = static_cast<int>(dist.size());
    f.points.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
        double sum_m = 0.0, sum_v = 0.0;
        for (int j = 0; j < k; ++j)
            if (ok[static_cast<std::size_t>(j)]) {
                sum_m += m[static_cast<std::size_t>(j)][i];
                sum_v += v[static_cast<std::size_t>(j)][i];
            }
        const double mu = sum_m / kept;
        const double vbar = sum_v / kept;
        double between = 0.0, v_spread = 0.0;
        for (int j = 0; j < k; ++j)
            if (ok[static_cast<std::size_t>(j)]) {
                const double dm = m[static_cast<std::size_t>(j)][i] - mu;
                const double dv = v[static_cast<std::size_t>(j)][i] - vbar;
                between += dm * dm;
                v_spread += dv * dv;
            }
        FrontierPoint& p = f.points[i];
        p.delta = delta_grid[i];
        p.mu = mu;
        p.sigma2 = vbar + (kept > 1 ? between / (kept - 1) : 0.0);
        p.mu_sd = kept > 1 ? std::sqrt(between / (kept - 1)) : 0.0;
        p.sigma2_sd = kept > 1 ? std::sqrt(v_spread / (kept - 1)) : 0.0;
    }
    f.validate();
    return f;
}

/// Monte-Carlo out-of-sample frontier under a known data-generating model.
/// Each repeat draws a fresh data set of size n, solves the robust problem
/// on it for every grid point, draws one more outcome and records the
/// reward; mu and sigma2 are the sample mean and (unbiased) variance of the
/// recorded rewards over the K repeats.
inline Frontier oos_frontier(const RewardModel& model, const DgmSampler& dgm,
                             Eigen::Index n, int K, const PhiDivergence& phi,
                             const std::vector<double>& delta_grid, RngSeed seed,
                             const FrontierOptions& opts = {}) {
    detail::check_grid(delta_grid);
    if (K < 2) throw ArgumentError("oos_frontier: K must be >= 2");
    if (n < 1) throw ArgumentError("oos_frontier: n must be >= 1");
    const auto g = delta_grid.size();

    std::vector<std::vector<double>> rec(static_cast<std::size_t>(K));
    std::vector<char> ok(static_cast<std::size_t>(K), 0);
    detail::parallel_for(K, opts.threads, [&](int r) {
        const auto ru = static_cast<std::size_t>(r);
        try {
            Rng rng(derive_seed(seed.value, ru));
            Vector first = dgm(rng);
            Matrix samples(n, first.size());
            samples.row(0) = first;
            for (Eigen::Index i = 1; i < n; ++i) samples.row(i) = dgm(rng);
            const EmpiricalDistribution data(std::move(samples));
            const Vector y_next = dgm(rng);
            std::vector<double> fr(g);
            for (std::size_t i = 0; i < g; ++i) {
                const auto sol = robust_optimize(model, data, delta_grid[i], phi, opts.solve);
                fr[i] = model.value(sol.x, y_next);
            }
            rec[ru] = std::move(fr);
            ok[ru] = 1;
        } catch (const SolverError&) {
            ok[ru] = 0;
        }
    });

    int kept = 0;
    for (int r = 0; r < K; ++r) kept += ok[static_cast<std::size_t>(r)];
    if (K - kept > opts.max_dropped_frac * K)
        throw SolverError("oos_frontier: " + std::to_string(K - kept) + " of " +
                              std::to_string(K) + " repeats failed",
                          Vector(), 0.0, 0);

    Frontier f;
    f.method = "oos_simulation";
    f.replicates = kept;
    f.data_size = static_cast<int>(n);
    f.points.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
        double sum = 0.0;
        for (int r = 0; r < K; ++r)
            if (ok[static_cast<std::size_t>(r)]) sum += rec[static_cast<std::size_t>(r)][i];
        const double mu = sum / kept;
        double ss = 0.0, s4 = 0.0;
        for (int r = 0; r < K; ++r)
            if (ok[static_cast<std::size_t>(r)]) {
                const double d = rec[static_cast<std::size_t>(r)][i] - mu;
                ss += d * d;
                s4 += d * d * d * d;
            }
        const double var = ss / (kept - 1);
        FrontierPoint& p = f.points[i];
        p.delta = delta_grid[i];
        p.mu = mu;
        p.sigma2 = var;
        p.mu_sd = std::sqrt(var / kept);  // standard error of mu
        const double var_of_sq = std::max(0.0, s4 / kept - (ss / kept) * (ss / kept));
        p.sigma2_sd = std::sqrt(var_of_sq / kept);
    }
    f.validate();
    return f;
}

/// Frontier of solutions computed and evaluated directly under a reference
/// distribution (a large sample standing in for the data-generating model).
inline Frontier true_frontier(const RewardModel& model, const EmpiricalDistribution& ref,
                              const PhiDivergence& phi,
                              const std::vector<double>& delta_grid,
                              const FrontierOptions& opts = {}) {
    detail::check_grid(delta_grid);
    Frontier f;
    f.method = "true_frontier";
    f.replicates = 0;
    f.data_size = static_cast<int>(ref.size());
    f.points.resize(delta_grid.size());
    detail::parallel_for(static_cast<int>(delta_grid.size()), opts.threads, [&](int i) {
        const auto iu = static_cast<std::size_t>(i);
        const auto sol = robust_optimize(model, ref, delta_grid[iu], phi, opts.solve);
        const auto [mean, var] = model_reward_stats(model, sol.x, ref);
        f.points[iu] = FrontierPoint{delta_grid[iu], mean, var, 0.0, 0.0};
    });
    f.validate();
    return f;
}

/// Affine rescaling per axis sending the smallest-delta point to (1, 1) and
/// the largest-delta point to (0, 0); dispersion fields are scaled by the
/// same factors. Idempotent. A zero-range axis is an error.
inline Frontier normalize_frontier(const Frontier& f) {
    if (f.points.size() < 2)
        throw ArgumentError("normalize_frontier: need at least two points");
    const FrontierPoint& a = f.points.front();
    const FrontierPoint& b = f.points.back();
    const double mu_range = a.mu - b.mu;
    const double s2_range = a.sigma2 - b.sigma2;
    if (mu_range == 0.0 || s2_range == 0.0)
        throw ArgumentError("normalize_frontier: degenerate axis");
    Frontier out = f;
    for (auto& p : out.points) {
        p.mu = (p.mu - b.mu) / mu_range;
        p.sigma2 = (p.sigma2 - b.sigma2) / s2_range;
        p.mu_sd = std::abs(p.mu_sd / mu_range);
        p.sigma2_sd = std::abs(p.sigma2_sd / s2_range);
    }
    return out;
}

// ---------------------------------------------------------------------------
// calibration rules

struct MaxMean {};
struct MeanVarTradeoff {
    double lambda = 0.0;  // weight on the variance, >= 0
};
struct Satisficing {
    double target = 0.0;  // worst-case objective floor
};
struct HighConfidence {
    double alpha = 0.1;  // significance level in (0, 1)
    enum class Threshold { Bootstrap, ChiSquare } threshold = Threshold::Bootstrap;
};
using CalibrationRule = std::variant<MaxMean, MeanVarTradeoff, Satisficing, HighConfidence>;

/// Solver access needed by the satisficing and high-confidence rules.
struct CalibrationContext {
    const RewardModel* model = nullptr;
    const EmpiricalDistribution* dist = nullptr;
    const PhiDivergence* phi = nullptr;
    RngSeed seed{0};
    int replicates = 50;  // bootstrap replicates for the divergence quantile
    SolveOptions solve;
};

namespace detail {

// Acklam-style rational approximation of the standard normal quantile.
inline double normal_quantile(double p) {
    if (!(p > 0 && p < 1)) throw ArgumentError("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        const double q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Wilson-Hilferty approximation of the chi-square quantile.
inline double chi_square_quantile(double p, double dof) {
    const double z = normal_quantile(p);
    const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
    return dof * t * t * t;
}

// (1 - alpha) empirical quantile of the divergence between bootstrap
// reweightings and the original empirical distribution.
inline double divergence_quantile(const CalibrationContext& ctx, double alpha) {
    const auto& dist = *ctx.dist;
    const auto n = dist.size();
    const Vector p = dist.weights;
    std::vector<double> h(static_cast<std::size_t>(ctx.replicates));
    for (int j = 0; j < ctx.replicates; ++j) {
        Rng rng(derive_seed(ctx.seed.value, static_cast<std::uint64_t>(j)));
        const auto counts = bootstrap_counts(n, rng);
        Vector q(n);
        for (Eigen::Index i = 0; i < n; ++i)
            q[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                   static_cast<double>(n);
        h[static_cast<std::size_t>(j)] = divergence(q, p, *ctx.phi);
    }
    std::sort(h.begin(), h.end());
    const auto k = static_cast<std::size_t>(ctx.replicates);
    const auto idx = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(k - 1),
        std::max(0.0, std::ceil((1.0 - alpha) * static_cast<double>(k)) - 1.0)));
    return h[idx];
}

inline double realized_divergence(const CalibrationContext& ctx, double delta) {
    const auto sol = robust_optimize(*ctx.model, *ctx.dist, delta, *ctx.phi, ctx.solve);
    const auto wc = worst_case(*ctx.model, sol.x, *ctx.dist, delta, *ctx.phi);
    return divergence(wc.weights, ctx.dist->weights, *ctx.phi);
}

}  // namespace detail

/// Picks the robustness parameter from a frontier according to the rule.
/// MaxMean and MeanVarTradeoff read the frontier alone; Satisficing and
/// HighConfidence re-solve robust problems and need a context.
inline double calibrate(const Frontier& f, const CalibrationRule& rule,
                        const CalibrationContext* ctx = nullptr) {
    if (f.points.empty()) throw ArgumentError("calibrate: empty frontier");

    if (std::holds_alternative<MaxMean>(rule) ||
        std::holds_alternative<MeanVarTradeoff>(rule)) {
        const double lambda = std::holds_alternative<MaxMean>(rule)
                                  ? 0.0
                                  : std::get<MeanVarTradeoff>(rule).lambda;
        if (lambda < 0) throw ArgumentError("calibrate: lambda must be >= 0");
        double best_score = -kInf, best_delta = f.points.front().delta;
        for (const auto& p : f.points) {
            const double score = p.mu - lambda * p.sigma2;
            if (score > best_score) {  // ties keep the smaller delta
                best_score = score;
                best_delta = p.delta;
            }
        }
        return best_delta;
    }

    if (std::holds_alternative<Satisficing>(rule)) {
        if (!ctx || !ctx->model || !ctx->dist || !ctx->phi)
            throw ArgumentError("calibrate: satisficing needs a solver context");
        const double target = std::get<Satisficing>(rule).target;
        bool found = false;
        double best_delta = 0.0;
        for (const auto& p : f.points) {
            const auto sol =
                robust_optimize(*ctx->model, *ctx->dist, p.delta, *ctx->phi, ctx->solve);
            if (sol.objective >= target) {
                found = true;
                best_delta = p.delta;  // grid ascends, keep the largest qualifying
            }
        }
        if (!found)
            throw CalibrationError("calibrate: satisficing target unachievable at any "
                                   "grid point, including delta = 0");
        return best_delta;
    }

    const auto& hc = std::get<HighConfidence>(rule);
    if (!(hc.alpha > 0 && hc.alpha < 1))
        throw ArgumentError("calibrate: alpha must be in (0, 1)");
    if (!ctx || !ctx->model || !ctx->dist || !ctx->phi)
        throw ArgumentError("calibrate: high-confidence needs a solver context");
    const double q =
        hc.threshold == HighConfidence::Threshold::Bootstrap
            ? detail::divergence_quantile(*ctx, hc.alpha)
            : detail::chi_square_quantile(1.0 - hc.alpha,
                                          static_cast<double>(ctx->dist->size() - 1)) /
                  (2.0 * static_cast<double>(ctx->dist->size()));

    // realized divergence of the worst-case weights grows with delta; match
    // it to the quantile radius by bisection in log delta
    double lo = 1e-6, hi = 1e4;
    const double div_lo = detail::realized_divergence(*ctx, lo);
    const double div_hi = detail::realized_divergence(*ctx, hi);
    if (!(div_lo < q && q < div_hi))
        throw CalibrationError(
            "calibrate: high-confidence bisection bracket failure (quantile " +
            std::to_string(q) + " outside realized divergence range [" +
            std::to_string(div_lo) + ", " + std::to_string(div_hi) + "])");
    double delta = hi;
    for (int it = 0; it < 100; ++it) {
        delta = std::sqrt(lo * hi);
        const double div = detail::realized_divergence(*ctx, delta);
        if (std::abs(div - q) <= 1e-4 * q) break;
        (div < q ? lo : hi) = delta;
    }
    return delta;
}

// ---------------------------------------------------------------------------
// serialization: CSV with a JSON sidecar for the run metadata

inline void write_frontier_csv(const Frontier& f, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw DataError("cannot open for writing: " + path);
    std::fprintf(out, "delta,mu,sigma2,mu_sd,sigma2_sd\n");
    for (const auto& p : f.points)
        std::fprintf(out, "%.17g,%.17g,%.17g,%.17g,%.17g\n", p.delta, p.mu, p.sigma2,
                     p.mu_sd, p.sigma2_sd);
    std::fclose(out);
}

inline Frontier read_frontier_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "delta,mu,sigma2,mu_sd,sigma2_sd")
        throw DataError(path + ": unexpected header '" + line + "'");
    Frontier f;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        FrontierPoint p;
        double* fields[5] = {&p.delta, &p.mu, &p.sigma2, &p.mu_sd, &p.sigma2_sd};
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(ss, cell, ','))
                throw DataError(path + ": row " + std::to_string(row) + ": missing field");
            std::size_t pos = 0;
            try {
                *fields[i] = std::stod(cell, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != cell.size())
                throw DataError(path + ": row " + std::to_string(row) + ": bad number '" +
                                cell + "'");
        }
        if (std::getline(ss, cell, ','))
            throw DataError(path + ": row " + std::to_string(row) + ": extra field");
        f.points.push_back(p);
    }
    return f;
}

inline void write_frontier_meta_json(const Frontier& f, const std::string& path) {
    nlohmann::json j;
    j["method"] = f.method;
    j["replicates"] = f.replicates;
    j["data_size"] = f.data_size;
    j["points"] = f.points.size();
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

inline void read_frontier_meta_json(Frontier& f, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    f.method = j.at("method").get<std::string>();
    f.replicates = j.at("replicates").get<int>();
    f.data_size = j.at("data_size").get<int>();
}

}  // namespace dromv
