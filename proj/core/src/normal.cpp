#include "effect_engine/normal.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "effect_engine/error.hpp"

namespace effect_engine {

double normal_cdf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_sf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(x * M_SQRT1_2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal quantile needs p in (0, 1)");
  return -M_SQRT2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace effect_engine
