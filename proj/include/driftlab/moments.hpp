#pragma once

/// @file moments.hpp
/// @brief Conditional one-step moments of the neutral frequency, the
/// third-order upper bound on sqrt(z), and empirical moment estimators.

#include <cstdint>
#include <span>

namespace driftlab {

struct MomentTriple {
    double mean = 0.0;
    double variance = 0.0;
    double third_central = 0.0;
};

/// Moments of p_t given p_{t-1} = p for PBIL:
/// mean p, variance (rho^2/mu) p(1-p), third (rho^3/mu^2) p(1-p)(1-2p).
MomentTriple pbil_conditional_moments(double p, std::int64_t mu, double rho);

/// Moments of p_t given p_{t-1} = p for the cGA:
/// mean p, variance (2/K^2) p(1-p), third 0.
MomentTriple cga_conditional_moments(double p, std::int64_t K);

struct SqrtBoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Compares sqrt(z) with its third-order expansion around z0,
///   sqrt(z0) + (z-z0)/(2 sqrt z0) - (z-z0)^2/(8 z0^{3/2}) + (z-z0)^3/(16 z0^{5/2}),
/// which is an upper bound for all z >= 0, z0 > 0. `holds` allows a relative
/// slack of 1e-12. Throws DomainError for z < 0 or z0 <= 0.
SqrtBoundCheck check_sqrt_bound(double z, double z0);

/// Sample mean, unbiased variance and plug-in third central moment.
/// `center` is only a shift for numerically stable accumulation (a value
/// close to the mean is best). Throws InsufficientData below 2 samples.
MomentTriple empirical_moments(std::span<const double> samples, double center);

} // namespace driftlab
