#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

// End-to-end checks of the command-line tool: artifact determinism and the
// documented exit codes. The binary path is injected by the build.

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(DROMV_CLI_PATH) + " " + args + " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "dromv_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_file(const std::string& name, const std::string& content) {
    const auto path = scratch() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

const std::string kToyCfg =
    "experiment = toy\n"
    "toy_points = 0, 0, 3\n"
    "delta_grid = 0, 0.01, 0.04\n"
    "n = 20\nK = 200\nk = 10\nseed = 99\n";

}  // namespace

TEST_CASE("suite reruns are byte identical") {
    const auto cfg = write_file("toy.cfg", kToyCfg);
    const auto out1 = scratch() / "run1";
    const auto out2 = scratch() / "run2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    REQUIRE(run_cli("run-suite toy --config " + cfg + " --out " + out1.string()) == 0);
    REQUIRE(run_cli("run-suite toy --config " + cfg + " --out " + out2.string()) == 0);

    int compared = 0;
    for (const auto& e : fs::directory_iterator(out1)) {
        const auto name = e.path().filename();
        CAPTURE(name.string());
        // meta.json embeds the out directory, which differs by design
        if (name == "meta.json") continue;
        CHECK(slurp(e.path()) == slurp(out2 / name));
        ++compared;
    }
    CHECK(compared >= 5);

    // a different seed changes the simulated artifacts
    const auto out3 = scratch() / "run3";
    fs::remove_all(out3);
    REQUIRE(run_cli("run-suite toy --config " + cfg + " --seed 100 --out " +
                    out3.string()) == 0);
    CHECK(slurp(out1 / "oos_frontier.csv") != slurp(out3 / "oos_frontier.csv"));
    // but the exact-distribution frontier does not depend on the seed
    CHECK(slurp(out1 / "true_frontier.csv") == slurp(out3 / "true_frontier.csv"));
}

TEST_CASE("frontier-bootstrap and calibrate emit their artifacts") {
    const auto cfg = write_file("toy2.cfg", kToyCfg + "rule = mean-var:0.5\n");
    const auto out = scratch() / "boot";
    fs::remove_all(out);
    REQUIRE(run_cli("frontier-bootstrap --config " + cfg + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "frontier.csv"));
    CHECK(fs::exists(out / "frontier.meta.json"));
    CHECK(fs::exists(out / "meta.json"));

    const auto outc = scratch() / "cal";
    fs::remove_all(outc);
    REQUIRE(run_cli("calibrate --config " + cfg + " --out " + outc.string()) == 0);
    CHECK(fs::exists(outc / "calibration.json"));
}

TEST_CASE("exit codes distinguish config, data and usage errors") {
    // no such config file
    CHECK(run_cli("run-suite toy --config /nope/missing.cfg") == 2);
    // malformed config line
    const auto bad = write_file("bad.cfg", "no equals sign here\n");
    CHECK(run_cli("run-suite toy --config " + bad) == 2);
    // config names a nonexistent data path: caught at validation time
    const auto badpath =
        write_file("badpath.cfg", "experiment = logistic\nlabeled_csv = /nope.csv\n");
    CHECK(run_cli("run-suite logistic --config " + badpath) == 2);
    // experiment/subcommand mismatch
    const auto toycfg = write_file("toy3.cfg", kToyCfg);
    CHECK(run_cli("run-suite portfolio --config " + toycfg) == 2);
    // malformed data file in an existing path: a data error
    const auto badcsv = write_file("bad.csv", "label,z\nM,\nB,1.0\n");
    const auto cfg3 = write_file(
        "toy4.cfg", "experiment = logistic\ncovariate_subset = 1\nlabeled_csv = " +
                        badcsv + "\nk = 5\n");
    CHECK(run_cli("run-suite logistic --config " + cfg3 + " --out " +
                  (scratch() / "lg").string()) == 3);
    // oos frontier needs a data-generating model
    const auto pcfg = write_file("p.cfg", "experiment = logistic\ncovariate_subset = 1\n"
                                          "labeled_csv = " +
                                              write_file("ok.csv",
                                                         "label,z\nM,1.0\nB,-1.0\n") +
                                              "\n");
    CHECK(run_cli("frontier-oos --config " + pcfg) == 2);
    // unknown subcommand is a usage error
    CHECK(run_cli("do-everything") == 2);
}
