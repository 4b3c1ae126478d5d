#include "driftlab/moments.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

MomentTriple pbil_conditional_moments(double p, std::int64_t mu, double rho) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p: must lie in [0, 1]");
    if (mu < 1) throw DomainError("mu: must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho: must lie in (0, 1]");
    const double m = static_cast<double>(mu);
    const double spread = p * (1.0 - p);
    return {p, rho * rho / m * spread, rho * rho * rho / (m * m) * spread * (1.0 - 2.0 * p)};
}

MomentTriple cga_conditional_moments(double p, std::int64_t K) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p: must lie in [0, 1]");
    if (K < 1) throw DomainError("K: must be >= 1");
    const double k = static_cast<double>(K);
    return {p, 2.0 / (k * k) * p * (1.0 - p), 0.0};
}

SqrtBoundCheck check_sqrt_bound(double z, double z0) {
    if (!(z >= 0.0)) throw DomainError("z: must be >= 0");
    if (!(z0 > 0.0)) throw DomainError("z0: must be > 0");
    const double root = std::sqrt(z0);
    const double d = z - z0;
    SqrtBoundCheck out;
    out.lhs = std::sqrt(z);
    out.rhs = root + 0.5 * d / root - 0.125 * d * d / (z0 * root) + d * d * d / (16.0 * z0 * z0 * root);
    out.holds = out.lhs <= out.rhs + 1e-12 * std::max(1.0, std::abs(out.rhs));
    return out;
}

MomentTriple empirical_moments(std::span<const double> samples, double center) {
    if (samples.size() < 2) throw InsufficientData("empirical_moments: need at least 2 samples");
    const auto n = static_cast<double>(samples.size());
    long double s1 = 0, s2 = 0, s3 = 0;
    for (double x : samples) {
        const long double d = static_cast<long double>(x) - center;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
    }
    const long double m1 = s1 / n;
    const long double m2 = s2 / n;
    const long double m3 = s3 / n;
    const long double central2 = m2 - m1 * m1;
    const long double central3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
    MomentTriple out;
    out.mean = static_cast<double>(center + m1);
    out.variance = std::max(0.0, static_cast<double>(central2 * n / (n - 1)));
    out.third_central = static_cast<double>(central3);
    return out;
}

} // namespace driftlab
