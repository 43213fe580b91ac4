#pragma once

namespace effect_engine {

/// Standard normal CDF; 0 and 1 at the infinities.
double normal_cdf(double x);

/// Standard normal upper tail, accurate far into the tail.
double normal_sf(double x);

/// Inverse of normal_cdf on the open interval (0, 1).
double normal_quantile(double p);

}  // namespace effect_engine
