#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace dromv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Bad argument to a library call (sizes, signs, invalid enum values).
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input data (CSV parse failures, bad labels, missing cells).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Optimizer failure. Carries the last iterate so callers can inspect how
// far the solve got before giving up.
class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& msg, Vector last_iterate, double residual,
                int iterations)
        : std::runtime_error(msg),
          last_iterate(std::move(last_iterate)),
          residual(residual),
          iterations(iterations) {}

    Vector last_iterate;
    double residual = kInf;
    int iterations = 0;
};

// Calibration rule could not be satisfied (unreachable target, bracket failure).
class CalibrationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RngSeed {
    std::uint64_t value = 0;
};

// splitmix64 step; used to derive independent per-replicate seeds so that
// parallel replicates never share a stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream. All transforms (uniform, bounded int,
/// normal, exponential) are implemented explicitly on top of mt19937_64,
/// whose raw output is fixed by the standard, so a given seed produces the
/// same draws on every platform and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    explicit Rng(RngSeed seed) : gen_(seed.value) {}

    // uniform double in [0, 1) with 53 random bits
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // unbiased integer in {0, ..., n-1} via rejection sampling
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw ArgumentError("uniform_int: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = gen_();
            if (x >= threshold) return x % n;
        }
    }

    // standard normal via Box-Muller (no state cached between calls)
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // exponential with the given rate, by inverse CDF
    double exponential(double rate) {
        if (!(rate > 0)) throw ArgumentError("exponential: rate must be positive");
        return -std::log(1.0 - uniform()) / rate;
    }

  private:
    std::mt19937_64 gen_;
};

// log(sum_i w_i exp(a_i)) with max-subtraction; w >= 0, not all zero
inline double log_sum_exp_weighted(const Vector& a, const Vector& w) {
    if (a.size() != w.size() || a.size() == 0)
        throw ArgumentError("log_sum_exp_weighted: size mismatch or empty");
    const double m = a.maxCoeff();
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        s += w[i] * std::exp(a[i] - m);
    return m + std::log(s);
}

// log(1 + exp(t)) without overflow
inline double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// logistic function 1 / (1 + exp(-t)), stable for large |t|
inline double sigmoid(double t) {
    if (t >= 0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace dromv
