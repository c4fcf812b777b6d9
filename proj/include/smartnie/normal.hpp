#pragma once

// Standard normal distribution functions. Everything downstream (test
// statistics, power, sample size, the latent-variable scenario builder)
// goes through these three calls.

namespace smartnie {

/// Standard normal CDF. Throws on non-finite input.
double normal_cdf(double x);

/// Upper-tail probability 1 - Phi(x), computed without cancellation.
double normal_sf(double x);

/// Inverse of normal_cdf on the open interval (0, 1).
/// |normal_cdf(normal_quantile(p)) - p| <= 1e-10 over the whole domain.
double normal_quantile(double p);

/// Standard normal density.
double normal_pdf(double x);

/// Critical value z_alpha, the (1 - alpha) quantile.
inline double z_upper(double alpha) { return -normal_quantile(alpha); }

} // namespace smartnie
