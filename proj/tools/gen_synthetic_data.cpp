// Generates the synthetic data files shipped under data/:
//
//   synthetic_returns.csv  monthly decimal returns for 10 assets,
//                          1968-01 .. 1986-06, one-factor model
//                          r_it = mu_i + beta_i F_t + e_it with
//                          F ~ N(0, 0.035^2), e_it ~ N(0, sigma_i^2)
//
//   synthetic_wdbc.csv     569 labeled rows with 30 covariates; covariates
//                          2, 24 and 25 carry the class signal through a
//                          logistic link, the rest are correlated noise
//
// Both files are deterministic functions of the seeds below.

#include <cstdio>
#include <string>
#include <vector>

#include "dromv/common.hpp"

using dromv::Rng;

namespace {

void write_returns(const std::string& path) {
    Rng rng(971968);
    const int d = 10;
    const double factor_sd = 0.035;
    std::vector<double> mu(d), beta(d), idio_sd(d);
    for (int i = 0; i < d; ++i) {
        mu[i] = 0.006 + 0.0006 * i;          // 0.6% .. 1.14% monthly mean
        beta[i] = 0.8 + 0.04 * i;            // 0.8 .. 1.16 factor loading
        idio_sd[i] = 0.020 + 0.0025 * i;     // 2.0% .. 4.25% idiosyncratic
    }
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        std::perror("fopen");
        std::exit(1);
    }
    std::fprintf(f, "date");
    for (int i = 0; i < d; ++i) std::fprintf(f, ",A%02d", i + 1);
    std::fprintf(f, "\n");
    for (int year = 1968; year <= 1986; ++year) {
        const int last_month = (year == 1986) ? 6 : 12;
        for (int month = 1; month <= last_month; ++month) {
            const double factor = factor_sd * rng.normal();
            std::fprintf(f, "%04d%02d", year, month);
            for (int i = 0; i < d; ++i) {
                const double r = mu[i] + beta[i] * factor + idio_sd[i] * rng.normal();
                std::fprintf(f, ",%.6f", r);
            }
            std::fprintf(f, "\n");
        }
    }
    std::fclose(f);
}

void write_wdbc_like(const std::string& path) {
    Rng rng(5691995);
    const int n = 569, d = 30;
    // signal carried by 1-based covariates 2, 24, 25
    const int s1 = 1, s2 = 23, s3 = 24;  // 0-based
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        std::perror("fopen");
        std::exit(1);
    }
    std::fprintf(f, "label");
    for (int j = 0; j < d; ++j) std::fprintf(f, ",attr%02d", j + 1);
    std::fprintf(f, "\n");
    for (int i = 0; i < n; ++i) {
        std::vector<double> z(d);
        const double common = rng.normal();  // shared component, features correlate
        for (int j = 0; j < d; ++j) z[j] = 0.6 * common + 0.8 * rng.normal();
        const double score = 1.9 * z[s1] + 1.4 * z[s2] + 1.1 * z[s3];
        // intercept tuned for roughly the 63/37 class split of the real data
        const double p_pos = 1.0 / (1.0 + std::exp(-(score - 1.2)));
        const bool malignant = rng.uniform() < p_pos;
        // mild per-feature location/scale heterogeneity
        std::fprintf(f, "%s", malignant ? "M" : "B");
        for (int j = 0; j < d; ++j) {
            const double scale = 0.5 + 0.15 * (j % 7);
            const double shift = 0.2 * (j % 5);
            std::fprintf(f, ",%.6f", shift + scale * z[j]);
        }
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    write_returns(dir + "/synthetic_returns.csv");
    write_wdbc_like(dir + "/synthetic_wdbc.csv");
    std::printf("wrote %s/synthetic_returns.csv and %s/synthetic_wdbc.csv\n",
                dir.c_str(), dir.c_str());
    return 0;
}
