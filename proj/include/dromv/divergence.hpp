#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dromv/common.hpp"

namespace dromv {

/// A phi-divergence family handle.
///
/// Holds phi with its first three derivatives, the convex conjugate
/// phi*(zeta) = sup_z { z*zeta - phi(z) } with its derivatives, and the
/// lower end of dom(phi). Every member must satisfy
///
///     dom(phi) in [0, inf),  phi(1) = 0,  phi'(1) = 0,  phi''(1) > 0,
///
/// which is validated numerically at construction. phi''(1) and phi'''(1)
/// are cached since the small-delta expansions depend only on them.
struct PhiDivergence {
    enum class Kind { RelativeEntropy, ModifiedChiSquare, Custom };

    Kind kind = Kind::Custom;
    std::string name;

    std::function<double(double)> phi;      // z -> phi(z), +inf outside domain
    std::function<double(double)> phi_d1;   // phi'
    std::function<double(double)> phi_d2;   // phi''
    std::function<double(double)> phi_d3;   // phi'''
    std::function<double(double)> conj;     // zeta -> phi*(zeta)
    std::function<double(double)> conj_d1;  // (phi*)'
    std::function<double(double)> conj_d2;  // (phi*)'', optional (empty -> finite differences)

    double domain_lo = 0.0;  // lower end of dom(phi), >= 0
    double phi2_1 = 0.0;     // phi''(1)
    double phi3_1 = 0.0;     // phi'''(1)

    double conj_d2_or_fd(double zeta) const {
        if (conj_d2) return conj_d2(zeta);
        const double h = 1e-6 * std::max(1.0, std::abs(zeta));
        return (conj_d1(zeta + h) - conj_d1(zeta - h)) / (2.0 * h);
    }

    /// Builds and validates a divergence from the supplied callables.
    /// Throws ArgumentError when the regularity conditions fail on the
    /// probe grid.
    static PhiDivergence make(Kind kind, std::string name,
                              std::function<double(double)> phi,
                              std::function<double(double)> phi_d1,
                              std::function<double(double)> phi_d2,
                              std::function<double(double)> phi_d3,
                              std::function<double(double)> conj,
                              std::function<double(double)> conj_d1,
                              std::function<double(double)> conj_d2 = {},
                              double domain_lo = 0.0) {
        PhiDivergence d;
        d.kind = kind;
        d.name = std::move(name);
        d.phi = std::move(phi);
        d.phi_d1 = std::move(phi_d1);
        d.phi_d2 = std::move(phi_d2);
        d.phi_d3 = std::move(phi_d3);
        d.conj = std::move(conj);
        d.conj_d1 = std::move(conj_d1);
        d.conj_d2 = std::move(conj_d2);
        d.domain_lo = domain_lo;
        d.phi2_1 = d.phi_d2(1.0);
        d.phi3_1 = d.phi_d3(1.0);
        d.validate();
        return d;
    }

    /// Relative entropy: phi(z) = z ln z - z + 1 (phi(0) = 1 by continuity).
    /// Normalized so that phi'(1) = 0; phi*(zeta) = e^zeta - 1.
    static PhiDivergence relative_entropy() {
        return make(
            Kind::RelativeEntropy, "relative-entropy",
            [](double z) {
                if (z < 0) return kInf;
                if (z == 0) return 1.0;
                return z * std::log(z) - z + 1.0;
            },
            [](double z) { return std::log(z); },
            [](double z) { return 1.0 / z; },
            [](double z) { return -1.0 / (z * z); },
            [](double zeta) { return std::expm1(zeta); },
            [](double zeta) { return std::exp(zeta); },
            [](double zeta) { return std::exp(zeta); });
    }

    /// Modified chi-square: phi(z) = (z - 1)^2 on z >= 0. The conjugate is
    /// piecewise because of the domain constraint:
    /// phi*(zeta) = zeta + zeta^2/4 for zeta >= -2, and -1 below.
    static PhiDivergence modified_chi_square() {
        return make(
            Kind::ModifiedChiSquare, "modified-chi-square",
            [](double z) {
                if (z < 0) return kInf;
                return (z - 1.0) * (z - 1.0);
            },
            [](double z) { return 2.0 * (z - 1.0); },
            [](double) { return 2.0; },
            [](double) { return 0.0; },
            [](double zeta) { return zeta >= -2.0 ? zeta + 0.25 * zeta * zeta : -1.0; },
            [](double zeta) { return zeta >= -2.0 ? 1.0 + 0.5 * zeta : 0.0; },
            [](double zeta) { return zeta >= -2.0 ? 0.5 : 0.0; });
    }

  private:
    void validate() const {
        constexpr double point_tol = 1e-12;
        if (domain_lo < 0)
            throw ArgumentError(name + ": dom(phi) must lie in [0, inf)");
        if (std::abs(phi(1.0)) > point_tol)
            throw ArgumentError(name + ": phi(1) must be 0");
        if (std::abs(phi_d1(1.0)) > point_tol)
            throw ArgumentError(name + ": phi'(1) must be 0");
        if (!(phi2_1 > 0))
            throw ArgumentError(name + ": phi''(1) must be positive");

        // convexity and Fenchel identity phi*(phi'(z)) = z phi'(z) - phi(z)
        // on a probe grid inside the domain
        const std::vector<double> probes = {0.05, 0.1, 0.25, 0.5, 0.75, 1.0,
                                            1.5,  2.0, 3.0,  5.0, 10.0};
        for (double z : probes) {
            if (z <= domain_lo) continue;
            if (phi_d2(z) < -1e-12)
                throw ArgumentError(name + ": phi not convex at probe point");
            const double zeta = phi_d1(z);
            const double lhs = conj(zeta);
            const double rhs = z * zeta - phi(z);
            if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, std::abs(rhs)))
                throw ArgumentError(name + ": Fenchel identity violated at probe point");
        }
    }
};

/// Divergence of the weight vector q relative to p:
///
///     sum_{i: p_i > 0} p_i * phi(q_i / p_i)
///
/// when q is a probability vector supported where p is, and +inf otherwise.
/// +inf is a legitimate function value here, not an error; only malformed
/// arguments (length mismatch, negative entries, p not a distribution) throw.
inline double divergence(const Vector& q, const Vector& p, const PhiDivergence& d) {
    if (q.size() != p.size())
        throw ArgumentError("divergence: q and p must have the same length");
    if (q.size() == 0) throw ArgumentError("divergence: empty weight vectors");
    double psum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 0) throw ArgumentError("divergence: negative weight in p");
        if (q[i] < 0) throw ArgumentError("divergence: negative weight in q");
        psum += p[i];
    }
    if (std::abs(psum - 1.0) > 1e-9)
        throw ArgumentError("divergence: p must sum to 1");

    double qsum_on_support = 0.0;
    double value = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] > 0) {
            qsum_on_support += q[i];
            value += p[i] * d.phi(q[i] / p[i]);
        }
    }
    // Support/simplex condition: all of q's mass must sit on the support of p.
    if (std::abs(qsum_on_support - 1.0) > 1e-12) return kInf;
    return value;
}

/// Taylor coefficients of the conjugate at 0:
/// phi*(zeta) = zeta + alpha2/2 zeta^2 + alpha3/6 zeta^3 + o(zeta^3)
/// with alpha2 = 1/phi''(1) and alpha3 = -phi'''(1)/phi''(1)^3.
inline std::pair<double, double> conjugate_taylor_coeffs(const PhiDivergence& d) {
    const double alpha2 = 1.0 / d.phi2_1;
    const double alpha3 = -d.phi3_1 / (d.phi2_1 * d.phi2_1 * d.phi2_1);
    return {alpha2, alpha3};
}

}  // namespace dromv
