#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <cstddef>

namespace oracle {

// Phi(x) from the Taylor series Phi(x) = 1/2 + phi(x) sum x^(2k+1) / (2k+1)!!,
// summed in long double. Accurate for |x| <= 8 in absolute terms.
inline long double phi_series(long double x)
{
    const long double pdf = std::exp(-x * x / 2.0L) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
    long double term = x;
    long double sum = x;
    for (int k = 1; k < 2000; ++k) {
        term *= x * x / (2.0L * k + 1.0L);
        sum += term;
        if (std::fabs(term) < 1e-30L * std::fabs(sum)) {
            break;
        }
    }
    return 0.5L + pdf * sum;
}

// Lower-tail Phi for x < -3 by the continued fraction (Laplace), long double.
inline long double phi_tail(long double x)
{
    const long double z = -x;
    const long double pdf = std::exp(-z * z / 2.0L) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
    long double f = z;
    for (int k = 200; k >= 1; --k) {
        f = z + k / f;
    }
    return pdf / f;
}

inline long double cdf(long double x) { return x < -3.0L ? phi_tail(x) : phi_series(x); }

// Quantile by bisection on the oracle CDF.
inline double quantile(double p)
{
    long double lo = -40.0L;
    long double hi = 40.0L;
    for (int i = 0; i < 200; ++i) {
        long double mid = (lo + hi) / 2.0L;
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return static_cast<double>((lo + hi) / 2.0L);
}

// Trapezoid integral of the standard normal density over [a, b].
inline double trapezoid_pdf(double a, double b, std::size_t steps)
{
    const double h = (b - a) / static_cast<double>(steps);
    auto f = [](double x) { return std::exp(-x * x / 2.0) / std::sqrt(2.0 * 3.14159265358979323846); };
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < steps; ++i) {
        s += f(a + h * static_cast<double>(i));
    }
    return s * h;
}

} // namespace oracle
