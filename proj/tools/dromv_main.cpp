// dromv command-line interface.
//
// Subcommands:
//   frontier-bootstrap    bootstrap robust mean-variance frontier
//   frontier-oos          Monte-Carlo out-of-sample frontier (model-based
//                         experiments only)
//   calibrate             pick the robustness parameter by a named rule
//   run-suite <name>      full experiment suite (newsvendor, portfolio,
//                         logistic, toy)
//
// Every command takes --config PATH plus --seed/--out/--set overrides; the
// resolved configuration is written into the output directory so runs are
// reproducible from their artifacts. Exit codes: 0 success, 2 configuration
// error, 3 data error, 4 solver failure.

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <optional>

#include "dromv/dromv.hpp"

namespace {

using namespace dromv;

struct Instance {
    std::unique_ptr<RewardModel> model;
    EmpiricalDistribution data;
    std::optional<DgmSampler> dgm;
};

Instance build_instance(const ExperimentConfig& cfg) {
    Instance inst;
    if (cfg.experiment == "newsvendor") {
        const double scale =
            cfg.nv_mix_low * cfg.nv_mean_low + (1.0 - cfg.nv_mix_low) * cfg.nv_mean_high;
        inst.model = std::make_unique<NewsvendorModel>(cfg.nv_revenue, cfg.nv_cost,
                                                       cfg.nv_smoothing_rel * scale);
        inst.dgm = make_exponential_mixture_dgm(cfg.nv_mean_low, cfg.nv_mean_high,
                                                cfg.nv_mix_low);
        inst.data = sample_empirical(*inst.dgm, cfg.n, RngSeed{derive_seed(cfg.seed, 11)});
    } else if (cfg.experiment == "toy") {
        inst.model = std::make_unique<QuadraticToyModel>(1);
        Matrix atoms(static_cast<Eigen::Index>(cfg.toy_points.size()), 1);
        for (std::size_t i = 0; i < cfg.toy_points.size(); ++i)
            atoms(static_cast<Eigen::Index>(i), 0) = cfg.toy_points[i];
        inst.dgm = make_discrete_dgm(
            atoms, Vector::Constant(atoms.rows(), 1.0 / static_cast<double>(atoms.rows())));
        inst.data = sample_empirical(*inst.dgm, cfg.n, RngSeed{derive_seed(cfg.seed, 11)});
    } else if (cfg.experiment == "portfolio") {
        CsvOptions copt;
        copt.percent_to_decimal = cfg.percent_to_decimal;
        const auto table = ingest_returns_csv(cfg.returns_csv, copt);
        const auto d = static_cast<int>(table.returns.cols());
        inst.model = std::make_unique<ExpUtilityModel>(
            cfg.gamma, d,
            FeasibleSet::box_budget(Vector::Constant(d, cfg.box_lo),
                                    Vector::Constant(d, cfg.box_hi), cfg.budget));
        inst.data = returns_window(table, cfg.train_start, cfg.train_end);
    } else if (cfg.experiment == "logistic") {
        CsvOptions copt;
        copt.column_subset = cfg.covariate_subset;
        const auto table = ingest_labeled_csv(cfg.labeled_csv, copt);
        inst.model =
            std::make_unique<LogisticModel>(static_cast<int>(table.covariates.cols()));
        inst.data = labeled_to_distribution(table, 0, (table.labels.size() + 1) / 2);
    } else {
        throw ConfigError("unknown experiment: '" + cfg.experiment + "'");
    }
    return inst;
}

CalibrationRule parse_rule(const std::string& rule_text) {
    const auto colon = rule_text.find(':');
    const std::string name = rule_text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : rule_text.substr(colon + 1);
    auto need_arg = [&](const char* what) {
        if (arg.empty())
            throw ConfigError(std::string("rule '") + name + "' needs an argument: " +
                              name + ":<" + what + ">");
        try {
            std::size_t pos = 0;
            const double v = std::stod(arg, &pos);
            if (pos != arg.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("rule argument is not a number: '" + arg + "'");
        }
    };
    if (name == "max-mean") return MaxMean{};
    if (name == "mean-var") return MeanVarTradeoff{need_arg("lambda")};
    if (name == "satisficing") return Satisficing{need_arg("target")};
    if (name == "high-confidence") return HighConfidence{need_arg("alpha")};
    if (name == "high-confidence-chi2")
        return HighConfidence{need_arg("alpha"), HighConfidence::Threshold::ChiSquare};
    throw ConfigError("unknown rule '" + name +
                      "' (max-mean, mean-var:L, satisficing:T, high-confidence:A, "
                      "high-confidence-chi2:A)");
}

void emit_frontier(const Frontier& f, const ExperimentConfig& cfg) {
    const auto dir = detail::prepare_out_dir(cfg);
    write_frontier_csv(f, (dir / "frontier.csv").string());
    write_frontier_meta_json(f, (dir / "frontier.meta.json").string());
    detail::write_meta(cfg, dir, {"frontier.csv"});
    std::printf("wrote %s\n", (dir / "frontier.csv").c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"penalty-form distributionally robust optimization and "
                 "bootstrap frontier calibration"};
    app.require_subcommand(1);

    std::string config_path, out_dir, suite_name;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> overrides;

    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--seed", seed, "64-bit seed override")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--set", overrides, "config override key=value (repeatable)");

    auto* cmd_boot = app.add_subcommand("frontier-bootstrap",
                                        "bootstrap robust mean-variance frontier");
    auto* cmd_oos = app.add_subcommand("frontier-oos",
                                       "Monte-Carlo out-of-sample frontier");
    auto* cmd_cal = app.add_subcommand("calibrate",
                                       "calibrate the robustness parameter");
    auto* cmd_suite = app.add_subcommand("run-suite", "run a full experiment suite");
    cmd_suite->add_option("name", suite_name, "newsvendor|portfolio|logistic|toy")
        ->required();
    for (auto* sub : {cmd_boot, cmd_oos, cmd_cal, cmd_suite}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        KeyValueConfig kv;
        if (!config_path.empty()) kv = KeyValueConfig::load(config_path);
        for (const auto& o : overrides) kv.apply_override(o);
        ExperimentConfig cfg = ExperimentConfig::from(kv);
        if (seed_given) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (cmd_suite->parsed()) {
            if (!cfg.experiment.empty() && cfg.experiment != suite_name)
                throw ConfigError("config sets experiment='" + cfg.experiment +
                                  "' but the subcommand asked for '" + suite_name + "'");
            cfg.experiment = suite_name;
            run_suite(cfg);
            std::printf("suite '%s' written to %s\n", suite_name.c_str(),
                        cfg.out_dir.c_str());
            return 0;
        }

        if (cfg.experiment.empty())
            throw ConfigError("config must set 'experiment' for this subcommand");
        cfg.validate();
        const auto phi = cfg.make_phi();
        const auto grid = cfg.resolved_grid();
        FrontierOptions opts;
        opts.solve = cfg.solve;
        opts.threads = cfg.threads;
        Instance inst = build_instance(cfg);

        if (cmd_boot->parsed()) {
            const auto f =
                bootstrap_frontier(*inst.model, inst.data, phi, grid, cfg.bootstrap_k,
                                   RngSeed{derive_seed(cfg.seed, 12)}, opts);
            emit_frontier(f, cfg);
            return 0;
        }
        if (cmd_oos->parsed()) {
            if (!inst.dgm)
                throw ConfigError("experiment '" + cfg.experiment +
                                  "' has no data-generating model; frontier-oos applies "
                                  "to newsvendor and toy");
            const auto f = oos_frontier(*inst.model, *inst.dgm, cfg.n, cfg.repeats_K, phi,
                                        grid, RngSeed{derive_seed(cfg.seed, 13)}, opts);
            emit_frontier(f, cfg);
            return 0;
        }
        if (cmd_cal->parsed()) {
            const auto rule = parse_rule(cfg.rule);
            const auto f =
                bootstrap_frontier(*inst.model, inst.data, phi, grid, cfg.bootstrap_k,
                                   RngSeed{derive_seed(cfg.seed, 12)}, opts);
            CalibrationContext ctx{inst.model.get(), &inst.data, &phi,
                                   RngSeed{derive_seed(cfg.seed, 14)}, cfg.bootstrap_k,
                                   cfg.solve};
            const double delta = calibrate(f, rule, &ctx);
            const auto dir = detail::prepare_out_dir(cfg);
            write_frontier_csv(f, (dir / "frontier.csv").string());
            write_frontier_meta_json(f, (dir / "frontier.meta.json").string());
            nlohmann::json j;
            j["rule"] = cfg.rule;
            j["delta_star"] = delta;
            std::ofstream out(dir / "calibration.json");
            out << j.dump(2) << "\n";
            detail::write_meta(cfg, dir, {"frontier.csv", "calibration.json"});
            std::printf("delta_star = %.17g (rule %s)\n", delta, cfg.rule.c_str());
            return 0;
        }
        throw ConfigError("no subcommand handled");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ArgumentError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 4;
    }
}
