#include "smartnie/normal.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "smartnie/error.hpp"

namespace smartnie {

namespace {

    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;

    void require_finite(double x, const char* what)
    {
        if (!std::isfinite(x)) {
            fail(ErrorCode::invalid_argument, std::string(what) + ": argument must be finite");
        }
    }

    // Acklam's rational approximation, |relative error| < 1.15e-9.
    double quantile_initial(double p)
    {
        static constexpr std::array<double, 6> a { -3.969683028665376e+01, 2.209460984245205e+02,
            -2.759285104469687e+02, 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00 };
        static constexpr std::array<double, 5> b { -5.447609879822406e+01, 1.615858368580409e+02,
            -1.556989798598866e+02, 6.680131188771972e+01, -1.328068155288572e+01 };
        static constexpr std::array<double, 6> c { -7.784894002430293e-03, -3.223964580411365e-01,
            -2.400758277161838e+00, -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00 };
        static constexpr std::array<double, 4> d { 7.784695709041462e-03, 3.224671290700398e-01,
            2.445134137142996e+00, 3.754408661907416e+00 };
        constexpr double p_low = 0.02425;

        if (p < p_low) {
            double q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        if (p > 1.0 - p_low) {
            double q = std::sqrt(-2.0 * std::log1p(-p));
            return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        double q = p - 0.5;
        double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

} // namespace

double normal_cdf(double x)
{
    require_finite(x, "normal_cdf");
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

double normal_sf(double x)
{
    require_finite(x, "normal_sf");
    return 0.5 * std::erfc(x * inv_sqrt2);
}

double normal_pdf(double x)
{
    require_finite(x, "normal_pdf");
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        fail(ErrorCode::invalid_argument, "normal_quantile: p must lie strictly inside (0, 1)");
    }
    double x = quantile_initial(p);
    // One Halley step; the residual is taken on the smaller tail to avoid cancellation.
    double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace smartnie
