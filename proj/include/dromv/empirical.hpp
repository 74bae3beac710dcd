#pragma once

#include <functional>
#include <vector>

#include "dromv/common.hpp"

namespace dromv {

/// Weighted sample set {(Y_i, p_i)}. Samples are rows of a dense matrix;
/// weights default to uniform 1/n. Immutable by convention once built.
struct EmpiricalDistribution {
    Matrix samples;  // n x dim, one outcome per row
    Vector weights;  // n, nonnegative, sums to 1

    EmpiricalDistribution() = default;

    explicit EmpiricalDistribution(Matrix s) : samples(std::move(s)) {
        const Eigen::Index n = samples.rows();
        if (n == 0) throw ArgumentError("EmpiricalDistribution: no samples");
        weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    }

    EmpiricalDistribution(Matrix s, Vector w)
        : samples(std::move(s)), weights(std::move(w)) {
        validate();
    }

    // convenience for scalar outcomes
    static EmpiricalDistribution from_scalars(const std::vector<double>& values) {
        Matrix m(static_cast<Eigen::Index>(values.size()), 1);
        for (std::size_t i = 0; i < values.size(); ++i)
            m(static_cast<Eigen::Index>(i), 0) = values[i];
        return EmpiricalDistribution(std::move(m));
    }

    Eigen::Index size() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }

    bool uniform_weights(double tol = 1e-12) const {
        const double u = 1.0 / static_cast<double>(size());
        for (Eigen::Index i = 0; i < weights.size(); ++i)
            if (std::abs(weights[i] - u) > tol) return false;
        return true;
    }

    void validate() const {
        if (samples.rows() == 0) throw ArgumentError("EmpiricalDistribution: no samples");
        if (weights.size() != samples.rows())
            throw ArgumentError("EmpiricalDistribution: weight/sample count mismatch");
        double s = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0)
                throw ArgumentError("EmpiricalDistribution: negative weight");
            s += weights[i];
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw ArgumentError("EmpiricalDistribution: weights must sum to 1");
    }
};

/// n i.i.d. index draws with replacement; the shared primitive behind the
/// bootstrap so that resampled data sets and resampled weight vectors are
/// derived from identical draws.
inline std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (auto& i : idx)
        i = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    return idx;
}

/// Bootstrap data set: n samples drawn i.i.d. with replacement from dist,
/// returned as explicit samples with uniform weights. Requires uniform
/// input weights; identical seeds give identical resamples.
inline EmpiricalDistribution bootstrap_resample(const EmpiricalDistribution& dist,
                                                RngSeed seed) {
    if (dist.size() == 0) throw ArgumentError("bootstrap_resample: empty distribution");
    if (!dist.uniform_weights())
        throw ArgumentError("bootstrap_resample: weights must be uniform");
    Rng rng(seed);
    const auto idx = bootstrap_indices(dist.size(), rng);
    Matrix out(dist.size(), dist.dim());
    for (Eigen::Index i = 0; i < dist.size(); ++i)
        out.row(i) = dist.samples.row(idx[static_cast<std::size_t>(i)]);
    return EmpiricalDistribution(std::move(out));
}

/// Multinomial resample counts over the original atoms; used where the
/// bootstrap replicate is needed as a reweighting of the original support
/// (divergence-of-resample estimates).
inline std::vector<int> bootstrap_counts(Eigen::Index n, Rng& rng) {
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i)
        ++counts[rng.uniform_int(static_cast<std::uint64_t>(n))];
    return counts;
}

/// Sampler for a known data-generating model: draws one outcome vector.
using DgmSampler = std::function<Vector(Rng&)>;

/// i.i.d. sample of the given size from a data-generating model, as a
/// uniform empirical distribution. Large sizes serve as the numerical
/// stand-in for population expectations.
inline EmpiricalDistribution sample_empirical(const DgmSampler& dgm, Eigen::Index n,
                                              RngSeed seed) {
    if (n < 1) throw ArgumentError("sample_empirical: n must be >= 1");
    Rng rng(seed);
    Vector first = dgm(rng);
    Matrix m(n, first.size());
    m.row(0) = first;
    for (Eigen::Index i = 1; i < n; ++i) m.row(i) = dgm(rng);
    return EmpiricalDistribution(std::move(m));
}

/// Two-regime exponential demand: Exp(rate 1/mean_low) w.p. mix_low,
/// otherwise Exp(rate 1/mean_high).
inline DgmSampler make_exponential_mixture_dgm(double mean_low, double mean_high,
                                               double mix_low) {
    if (!(mean_low > 0) || !(mean_high > 0))
        throw ArgumentError("exponential mixture: means must be positive");
    if (mix_low < 0 || mix_low > 1)
        throw ArgumentError("exponential mixture: mixing weight must be in [0,1]");
    return [=](Rng& rng) {
        const double u = rng.uniform();
        const double mean = (u < mix_low) ? mean_low : mean_high;
        Vector y(1);
        y[0] = rng.exponential(1.0 / mean);
        return y;
    };
}

/// Discrete sampler over the rows of `atoms` with the given probabilities.
inline DgmSampler make_discrete_dgm(Matrix atoms, Vector probs) {
    if (atoms.rows() != probs.size() || atoms.rows() == 0)
        throw ArgumentError("discrete dgm: atom/probability size mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0) throw ArgumentError("discrete dgm: negative probability");
        s += probs[i];
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw ArgumentError("discrete dgm: probabilities must sum to 1");
    Vector cum(probs.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        cum[i] = acc;
    }
    return [atoms = std::move(atoms), cum = std::move(cum)](Rng& rng) {
        const double u = rng.uniform();
        Eigen::Index i = 0;
        while (i + 1 < cum.size() && u >= cum[i]) ++i;
        return Vector(atoms.row(i));
    };
}

}  // namespace dromv
