#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "effect_engine/dataset.hpp"
#include "effect_engine/model.hpp"

namespace fixtures {

using effect_engine::CovariateColumn;
using effect_engine::Dataset;

// y: 1 3 | 4 6, arms 0 0 | 1 1. Classical fit: beta = [2, 3],
// cov = [[1, -1], [-1, 2]].
inline Dataset four_rows() { return Dataset({1, 3, 4, 6}, {"0", "0", "1", "1"}); }

inline effect_engine::DesignMatrix design(const Dataset& data, std::string reference = "0") {
  effect_engine::ModelSpec spec;
  spec.reference_arm = std::move(reference);
  return effect_engine::build_design(data, spec);
}

inline effect_engine::FittedModel fit(const Dataset& data,
                                      effect_engine::CovarianceKind kind =
                                          effect_engine::CovarianceKind::classical,
                                      std::string reference = "0") {
  return effect_engine::fit_ols(design(data, std::move(reference)), kind);
}

// Two arms, numeric x and binary label g, n rows; noise on by default.
inline Dataset random_two_arm(std::uint64_t seed, std::size_t n = 80, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::vector<double> y(n), x(n);
  std::vector<std::string> arms(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    arms[i] = i % 2 ? "treat" : "ctrl";
    g[i] = (i / 2) % 2 ? "b" : "a";
    x[i] = u(rng);
    y[i] = 10 + 0.5 * x[i] + (g[i] == "b" ? 1.0 : 0.0) + (arms[i] == "treat" ? 2 + 0.3 * x[i] : 0.0) +
           noise * z(rng);
  }
  return Dataset(std::move(y), std::move(arms),
                 {CovariateColumn{"x", std::move(x)}, CovariateColumn{"g", std::move(g)}});
}

}  // namespace fixtures
