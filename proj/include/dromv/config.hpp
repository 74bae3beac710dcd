#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dromv/common.hpp"
#include "dromv/divergence.hpp"
#include "dromv/optimize.hpp"

namespace dromv {

/// Flat key = value configuration with '#' comments. Command-line overrides
/// (`--set key=value`) replace file values; the fully resolved set is
/// emitted into every run's meta.json so experiments are reproducible from
/// their artifacts.
class KeyValueConfig {
  public:
    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path);
        KeyValueConfig cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + trimmed + "'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + assignment + "'");
        values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    long long get_int(const std::string& key, long long fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': not an integer: '" + it->second + "'");
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': not an unsigned integer: '" +
                              it->second + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config key '" + key + "': expected true/false, got '" +
                          it->second + "'");
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& tok : split(it->second, ','))
            out.push_back(parse_double(key, trim(tok)));
        return out;
    }

    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<int> out;
        for (const auto& tok : split(it->second, ','))
            out.push_back(static_cast<int>(parse_double(key, trim(tok))));
        return out;
    }

    std::vector<std::string> get_string_list(
        const std::string& key, const std::vector<std::string>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::string> out;
        for (const auto& tok : split(it->second, ',')) out.push_back(trim(tok));
        return out;
    }

    const std::map<std::string, std::string>& raw() const { return values_; }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == sep) {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    double parse_double(const std::string& key, const std::string& value) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

/// Fully resolved experiment settings. Defaults mirror the experiments the
/// library ships with; every field lands in meta.json.
struct ExperimentConfig {
    std::string experiment;  // newsvendor | portfolio | logistic | toy
    std::string phi_kind = "relative-entropy";
    std::uint64_t seed = 12345;
    std::string out_dir = "runs/out";

    std::vector<double> delta_grid;
    long long n = 50;
    std::vector<int> n_list = {10, 30, 50};  // newsvendor sample sizes
    int repeats_K = 10000;
    int bootstrap_k = 50;
    int threads = 1;
    SolveOptions solve;

    // newsvendor
    double nv_revenue = 30.0;
    double nv_cost = 2.0;
    double nv_mean_low = 10.0;
    double nv_mean_high = 100.0;
    double nv_mix_low = 0.7;
    double nv_smoothing_rel = 1e-3;
    long long dgm_samples = 1000000;

    // portfolio
    std::string returns_csv = "data/synthetic_returns.csv";
    bool percent_to_decimal = false;
    double gamma = 1.0;
    std::string train_start = "196804";
    std::string train_end = "197206";
    std::vector<std::string> test_windows = {"197207:197609", "197610:198012",
                                             "198101:198503"};
    double box_lo = -1.0;
    double box_hi = 1.0;
    double budget = 1.0;
    std::vector<double> alphas = {0.10, 0.05, 0.01};

    // logistic
    std::string labeled_csv = "data/synthetic_wdbc.csv";
    std::vector<int> covariate_subset = {2, 24, 25};

    // toy
    std::vector<double> toy_points = {0.0, 0.0, 3.0};

    // calibrate subcommand
    std::string rule = "max-mean";

    static ExperimentConfig from(const KeyValueConfig& kv) {
        ExperimentConfig c;
        c.experiment = kv.get_string("experiment", "");
        c.phi_kind = kv.get_string("phi", c.phi_kind);
        c.seed = kv.get_u64("seed", c.seed);
        c.out_dir = kv.get_string("out", c.out_dir);
        c.delta_grid = kv.get_double_list("delta_grid", {});
        c.n = kv.get_int("n", c.n);
        c.n_list = kv.get_int_list("n_list", c.n_list);
        c.repeats_K = static_cast<int>(kv.get_int("K", c.repeats_K));
        c.bootstrap_k = static_cast<int>(kv.get_int("k", c.bootstrap_k));
        c.threads = static_cast<int>(kv.get_int("threads", c.threads));
        c.solve.tol = kv.get_double("tol", c.solve.tol);
        c.solve.max_iter = static_cast<int>(kv.get_int("max_iter", c.solve.max_iter));

        c.nv_revenue = kv.get_double("r", c.nv_revenue);
        c.nv_cost = kv.get_double("c", c.nv_cost);
        c.nv_mean_low = kv.get_double("demand_mean_low", c.nv_mean_low);
        c.nv_mean_high = kv.get_double("demand_mean_high", c.nv_mean_high);
        c.nv_mix_low = kv.get_double("mix_low", c.nv_mix_low);
        c.nv_smoothing_rel = kv.get_double("smoothing_rel", c.nv_smoothing_rel);
        c.dgm_samples = kv.get_int("dgm_samples", c.dgm_samples);

        c.returns_csv = kv.get_string("returns_csv", c.returns_csv);
        c.percent_to_decimal = kv.get_bool("percent_to_decimal", c.percent_to_decimal);
        c.gamma = kv.get_double("gamma", c.gamma);
        c.train_start = kv.get_string("train_start", c.train_start);
        c.train_end = kv.get_string("train_end", c.train_end);
        c.test_windows = kv.get_string_list("test_windows", c.test_windows);
        c.box_lo = kv.get_double("box_lo", c.box_lo);
        c.box_hi = kv.get_double("box_hi", c.box_hi);
        c.budget = kv.get_double("budget", c.budget);
        c.alphas = kv.get_double_list("alphas", c.alphas);

        c.labeled_csv = kv.get_string("labeled_csv", c.labeled_csv);
        c.covariate_subset = kv.get_int_list("covariate_subset", c.covariate_subset);

        c.toy_points = kv.get_double_list("toy_points", c.toy_points);
        c.rule = kv.get_string("rule", c.rule);
        return c;
    }

    PhiDivergence make_phi() const {
        if (phi_kind == "relative-entropy") return PhiDivergence::relative_entropy();
        if (phi_kind == "modified-chi-square") return PhiDivergence::modified_chi_square();
        throw ConfigError("unknown phi kind '" + phi_kind +
                          "' (expected relative-entropy or modified-chi-square)");
    }

    /// Grid defaults mirror the shipped experiments when none is configured.
    std::vector<double> resolved_grid() const {
        if (!delta_grid.empty()) return delta_grid;
        if (experiment == "portfolio") return {0, 1, 2, 3, 5, 10, 55, 58, 63};
        if (experiment == "logistic") return {0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
        return {0, 0.0025, 0.005, 0.01, 0.02, 0.04};  // newsvendor and toy
    }

    void validate() const {
        if (experiment != "newsvendor" && experiment != "portfolio" &&
            experiment != "logistic" && experiment != "toy")
            throw ConfigError("experiment must be one of newsvendor|portfolio|logistic|toy, "
                              "got '" + experiment + "'");
        make_phi();
        if (n < 1 || repeats_K < 1 || bootstrap_k < 1)
            throw ConfigError("n, K and k must all be >= 1");
        if (threads < 1) throw ConfigError("threads must be >= 1");
        const auto grid = resolved_grid();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 0) throw ConfigError("delta_grid entries must be >= 0");
            if (i > 0 && !(grid[i] > grid[i - 1]))
                throw ConfigError("delta_grid must be strictly increasing");
        }
        if (experiment == "portfolio" && !std::filesystem::exists(returns_csv))
            throw ConfigError("returns_csv does not exist: " + returns_csv);
        if (experiment == "logistic" && !std::filesystem::exists(labeled_csv))
            throw ConfigError("labeled_csv does not exist: " + labeled_csv);
        if (experiment == "newsvendor") {
            if (!(nv_revenue > nv_cost && nv_cost > 0))
                throw ConfigError("newsvendor requires r > c > 0");
            for (int nn : n_list)
                if (nn < 1) throw ConfigError("n_list entries must be >= 1");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["phi"] = phi_kind;
        j["seed"] = seed;
        j["out"] = out_dir;
        j["delta_grid"] = resolved_grid();
        j["n"] = n;
        j["n_list"] = n_list;
        j["K"] = repeats_K;
        j["k"] = bootstrap_k;
        j["threads"] = threads;
        j["tol"] = solve.tol;
        j["max_iter"] = solve.max_iter;
        if (experiment == "newsvendor" || experiment == "toy") {
            j["r"] = nv_revenue;
            j["c"] = nv_cost;
            j["demand_mean_low"] = nv_mean_low;
            j["demand_mean_high"] = nv_mean_high;
            j["mix_low"] = nv_mix_low;
            j["smoothing_rel"] = nv_smoothing_rel;
            j["dgm_samples"] = dgm_samples;
            j["toy_points"] = toy_points;
        }
        if (experiment == "portfolio") {
            j["returns_csv"] = returns_csv;
            j["percent_to_decimal"] = percent_to_decimal;
            j["gamma"] = gamma;
            j["train_start"] = train_start;
            j["train_end"] = train_end;
            j["test_windows"] = test_windows;
            j["box_lo"] = box_lo;
            j["box_hi"] = box_hi;
            j["budget"] = budget;
            j["alphas"] = alphas;
        }
        if (experiment == "logistic") {
            j["labeled_csv"] = labeled_csv;
            j["covariate_subset"] = covariate_subset;
        }
        return j;
    }
};

}  // namespace dromv
