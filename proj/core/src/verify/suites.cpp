#include "effect_engine/verify/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "effect_engine/absolute_effects.hpp"
#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/error.hpp"
#include "effect_engine/ranking.hpp"
#include "effect_engine/relative_effects.hpp"
#include "effect_engine/verify/oracles.hpp"

namespace effect_engine::verify {
namespace {

using Rng = std::mt19937_64;

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

std::vector<std::string> arm_labels(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("arm" + std::to_string(i));
  return out;
}

// Every arm appears at least `per_arm` times; the rest are uniform.
std::vector<std::string> assign_arms(Rng& rng, std::size_t n, const std::vector<std::string>& arms,
                                     std::size_t per_arm) {
  std::vector<std::string> out;
  for (const auto& a : arms)
    for (std::size_t r = 0; r < per_arm; ++r) out.push_back(a);
  std::uniform_int_distribution<std::size_t> pick(0, arms.size() - 1);
  while (out.size() < n) out.push_back(arms[pick(rng)]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

CriterionResult timed(std::string name, const std::function<CriterionResult()>& body) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.name = std::move(name);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

CriterionResult delta_identity(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CovariateEncoding> encodings;
    const int numeric = std::uniform_int_distribution<int>(0, 3)(rng);
    const int categorical = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < numeric; ++i) encodings.push_back({"x" + std::to_string(i), false, false, {}});
    for (int i = 0; i < categorical; ++i) {
      CovariateEncoding enc{"g" + std::to_string(i), true, false, {}};
      const int levels = std::uniform_int_distribution<int>(2, 4)(rng);
      for (int l = 0; l < levels; ++l) enc.levels.push_back("L" + std::to_string(l));
      encodings.push_back(std::move(enc));
    }
    const auto arms = arm_labels(std::uniform_int_distribution<std::size_t>(2, 5)(rng));
    const auto& reference = arms[std::uniform_int_distribution<std::size_t>(0, arms.size() - 1)(rng)];
    ColumnSchema schema(encodings, arms, reference);
    CovariateProfile profile;
    for (std::size_t c = 0; c < schema.covariate_width(); ++c) profile.values.push_back(3.0 * normal(rng));

    for (const auto& to : arms) {
      for (const auto& from : arms) {
        if (to == from) continue;
        const Eigen::VectorXd direct = delta_vector(schema, profile, to, from).entries;
        const Eigen::VectorXd diff = baseline_vector(schema, profile, to).entries -
                                     baseline_vector(schema, profile, from).entries;
        ++checked;
        if (!(direct.array() == diff.array()).all()) ++mismatches;
      }
    }
  }
  CriterionResult r;
  r.passed = mismatches == 0;
  r.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(checked) +
             " arm pairs in 200 schemas";
  return r;
}

CriterionResult group_means(std::uint64_t seed) {
  Rng rng(seed + 1);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(4, 200)(rng);
    const auto arms = assign_arms(rng, n, {"control", "treatment"}, 1);
    const double shift = 10.0 * normal(rng);
    const double effect = 3.0 * normal(rng);
    const double sd = 0.5 + std::abs(normal(rng));
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i)
      y.push_back(shift + (arms[i] == "treatment" ? effect : 0.0) + sd * normal(rng));
    Dataset data(y, arms);
    ModelSpec spec;
    spec.reference_arm = "control";
    auto model = fit_ols(build_design(data, spec), CovarianceKind::hc1);
    auto est = ate(model, data, "treatment", "control");
    worst = std::max(worst, std::abs(est.estimate - group_means_effects(data, "treatment", "control")));
    auto profile = global_profile(data, model.schema);
    for (const auto* arm : {"control", "treatment"}) {
      const double b = apply(baseline_vector(model.schema, profile, arm), model).value;
      worst = std::max(worst, std::abs(b - group_mean(data, arm)));
    }
  }
  CriterionResult r;
  r.passed = worst <= 1e-10;
  r.detail = "max |model - group means| = " + fmt(worst) + " over 100 datasets (tol 1e-10)";
  return r;
}

CriterionResult saturated(std::uint64_t seed) {
  Rng rng(seed + 2);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool labels = trial % 2 == 1;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(12, 120)(rng);
    // Balanced cells first so every (g, arm) cell is populated.
    std::vector<int> g;
    std::vector<std::string> arms;
    for (int cell = 0; cell < 8; ++cell) {
      g.push_back(cell % 2);
      arms.push_back((cell / 2) % 2 ? "B" : "A");
    }
    std::bernoulli_distribution coin(0.5);
    while (g.size() < n) {
      g.push_back(coin(rng) ? 1 : 0);
      arms.push_back(coin(rng) ? "B" : "A");
    }
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      const double effect = g[i] ? 2.0 : -1.0;
      y.push_back(5.0 + 1.5 * g[i] + (arms[i] == "B" ? effect : 0.0) + normal(rng));
    }
    CovariateColumn column{"g", {}};
    if (labels) {
      std::vector<std::string> v;
      for (int gi : g) v.push_back(gi ? "hi" : "lo");
      column.values = std::move(v);
    } else {
      column.values = std::vector<double>(g.begin(), g.end());
    }
    Dataset data(y, arms, {column});
    ModelSpec spec;
    spec.reference_arm = "A";
    spec.covariance_kind = CovarianceKind::classical;
    auto model = fit_ols(build_design(data, spec), spec.covariance_kind);

    auto in_group = labels ? Predicate::parse("g == \"hi\"") : Predicate::parse("g == 1");
    auto out_group = labels ? Predicate::parse("g == \"lo\"") : Predicate::parse("g == 0");
    const double oracle_in = group_means_effects(data, "B", "A", in_group);
    const double oracle_out = group_means_effects(data, "B", "A", out_group);
    worst = std::max(worst, std::abs(cate(model, data, "B", "A", in_group).estimate - oracle_in));
    worst = std::max(worst, std::abs(cate(model, data, "B", "A", out_group).estimate - oracle_out));
    worst = std::max(worst, std::abs(hte(model, data, "B", "A", in_group).estimate -
                                     (oracle_in - oracle_out)));
  }
  CriterionResult r;
  r.passed = worst <= 1e-10;
  r.detail = "max |cate/hte - subgroup oracle| = " + fmt(worst) + " over 50 datasets (tol 1e-10)";
  return r;
}

CriterionResult coverage(std::uint64_t seed) {
  Rng rng(seed + 3);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  const int sims = 2000;
  const std::size_t n = 400;
  int covered = 0;
  for (int s = 0; s < sims; ++s) {
    std::vector<double> x1(n), y(n);
    std::vector<std::string> x2(n), arms(n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = normal(rng);
      x2[i] = coin(rng) ? "b" : "a";
      arms[i] = coin(rng) ? "t" : "c";
      const double w = arms[i] == "t" ? 1.0 : 0.0;
      const double b = x2[i] == "b" ? 1.0 : 0.0;
      const double sd = 0.5 + std::abs(x1[i]) + 0.5 * w;
      y[i] = 1.0 + 0.8 * x1[i] - 0.5 * b + w * (2.0 + 0.6 * x1[i] - 0.4 * b) + sd * normal(rng);
    }
    Dataset data(y, arms, {CovariateColumn{"x1", x1}, CovariateColumn{"x2", x2}});
    ModelSpec spec;
    spec.reference_arm = "c";
    auto model = fit_ols(build_design(data, spec), CovarianceKind::hc1);
    auto est = ate(model, data, "t", "c");
    // The delta vector targets the effect at the sample covariate means.
    double mean_x1 = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean_x1 += x1[i];
      mean_b += x2[i] == "b" ? 1.0 : 0.0;
    }
    mean_x1 /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    const double truth = 2.0 + 0.6 * mean_x1 - 0.4 * mean_b;
    if (est.ci_low <= truth && truth <= est.ci_high) ++covered;
  }
  const double rate = static_cast<double>(covered) / sims;
  CriterionResult r;
  r.passed = rate >= 0.93 && rate <= 0.97;
  r.detail = "empirical coverage " + fmt(rate) + " over 2000 simulations (band [0.93, 0.97])";
  return r;
}

CriterionResult ratio_hand_case() {
  auto m = ratio_moments({3.0, 2.0, 2.0, 1.0, -1.0});
  const double err = std::max(std::abs(m.expectation - 2.125), std::abs(m.variance - 1.8125));
  CriterionResult r;
  r.passed = err <= 1e-12;
  r.detail = "are = " + fmt(m.expectation) + ", variance = " + fmt(m.variance) +
             " (expected 2.125, 1.8125)";
  return r;
}

CriterionResult ratio_battery(std::uint64_t seed) {
  Rng rng(seed + 4);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int failures = 0;
  double worst_mean_z = 0.0, worst_var_rel = 0.0;
  for (int model_index = 0; model_index < 20; ++model_index) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(150, 400)(rng);
    const int covariates = model_index % 3;  // 0, 1 or 2 numeric covariates
    const auto arms = assign_arms(rng, n, {"c", "t"}, 5);
    std::vector<CovariateColumn> cols;
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(covariates), std::vector<double>(n));
    for (auto& x : xs)
      for (auto& v : x) v = normal(rng);
    const double base = 20.0 + 30.0 * unif(rng);
    const double effect = 6.0 * (unif(rng) - 0.5);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = base + (arms[i] == "t" ? effect : 0.0) + (2.0 + 2.0 * unif(rng)) * normal(rng);
      for (auto& x : xs) v += 1.5 * x[i] + (arms[i] == "t" ? 0.5 * x[i] : 0.0);
      y[i] = v;
    }
    for (int c = 0; c < covariates; ++c)
      cols.push_back({"x" + std::to_string(c), xs[static_cast<std::size_t>(c)]});
    Dataset data(y, arms, cols);
    ModelSpec spec;
    spec.reference_arm = "c";
    auto model = fit_ols(build_design(data, spec), CovarianceKind::hc1);
    auto rel = relative_effect(model, data, "t", "c");

    auto profile = global_profile(data, model.schema);
    OracleConfig config;
    config.seed = seed + 100 + static_cast<std::uint64_t>(model_index);
    auto mc = mc_ratio(model, delta_vector(model.schema, profile, "t", "c").entries,
                       baseline_vector(model.schema, profile, "c").entries, config);
    const double z = std::abs(mc.mean - rel.are) / mc.mc_se;
    const double var_rel = std::abs(mc.variance - rel.variance) / rel.variance;
    worst_mean_z = std::max(worst_mean_z, z);
    worst_var_rel = std::max(worst_var_rel, var_rel);
    if (z > config.sigma_multiple || var_rel > 0.10) ++failures;
  }
  CriterionResult r;
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + "/20 models disagree; worst mean gap " + fmt(worst_mean_z) +
             " mc_se (tol 3), worst variance gap " + fmt(100.0 * worst_var_rel) + "% (tol 10%)";
  return r;
}

CriterionResult orthant_bivariate() {
  double worst = 0.0;
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
    Eigen::Matrix2d sigma;
    sigma << 1.0, rho, rho, 1.0;
    auto res = mvn_orthant(Eigen::Vector2d::Zero(), sigma);
    worst = std::max(worst, std::abs(res.prob - bivariate_orthant(rho)));
  }
  CriterionResult r;
  r.passed = worst <= 5e-4;
  r.detail = "max |qmc - (1/4 + asin(rho)/(2 pi))| = " + fmt(worst) + " (tol 5e-4)";
  return r;
}

CriterionResult orthant_vs_monte_carlo(std::uint64_t seed) {
  Rng rng(seed + 5);
  std::normal_distribution<double> normal;
  int failures = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 2 + trial % 4;  // 2..5
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) = normal(rng);
    Eigen::MatrixXd sigma = a * a.transpose() + 0.2 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd mu(m);
    for (Eigen::Index i = 0; i < m; ++i) mu(i) = 0.7 * normal(rng);

    OrthantOptions options;
    options.seed = seed;
    auto qmc = mvn_orthant(mu, sigma, options);
    OracleConfig config;
    config.seed = seed + 200 + static_cast<std::uint64_t>(trial);
    auto mc = mc_orthant(mu, sigma, config);
    const double band = std::max(5e-4, config.sigma_multiple * mc.mc_se);
    const double gap = std::abs(qmc.prob - mc.prob);
    worst_ratio = std::max(worst_ratio, gap / band);
    if (gap > band) ++failures;
  }
  CriterionResult r;
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + "/20 matrices outside max(5e-4, 3 mc_se); worst gap " +
             fmt(worst_ratio) + " of band";
  return r;
}

// Posterior over k arms whose means are close enough for the ranking to be
// uncertain.
std::pair<Dataset, FittedModel> ranking_posterior(Rng& rng, std::size_t k) {
  std::normal_distribution<double> normal;
  const auto arms = arm_labels(k);
  const std::size_t n = 60 * k;
  auto assigned = assign_arms(rng, n, arms, 20);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = normal(rng);
    const auto a = static_cast<double>(std::stoi(assigned[i].substr(3)));
    y[i] = 10.0 + 0.05 * a + 0.5 * x[i] + normal(rng);
  }
  Dataset data(y, assigned, {CovariateColumn{"x", x}});
  ModelSpec spec;
  spec.reference_arm = arms[0];
  auto design = build_design(data, spec);
  auto model = fit_bayes(design, isotropic_prior(design.schema.size(), 0.0, 100.0, 1.0));
  return {std::move(data), std::move(model)};
}

CriterionResult prob_best_sums(std::uint64_t seed) {
  Rng rng(seed + 6);
  std::string detail;
  bool ok = true;
  for (std::size_t k : {3u, 4u, 5u}) {
    auto [data, model] = ranking_posterior(rng, k);
    OrthantOptions options;
    options.seed = seed;
    auto ranking = prob_best(model, data, model.schema.arms(), Predicate::always(), options);
    double total = 0.0, errors = 0.0;
    for (const auto& a : ranking.arms) {
      total += a.prob_best;
      errors += a.integration_error;
    }
    const bool pass = std::abs(total - 1.0) <= errors;
    ok = ok && pass;
    if (!detail.empty()) detail += ", ";
    detail += std::to_string(k) + " arms: |sum - 1| = " + fmt(std::abs(total - 1.0)) +
              " vs combined error " + fmt(errors);
  }
  CriterionResult r;
  r.passed = ok;
  r.detail = detail;
  return r;
}

CriterionResult exchangeable_three_arms(std::uint64_t seed) {
  // Three arms with identical outcome samples: the posterior is exchangeable.
  std::vector<double> y;
  std::vector<std::string> arms;
  for (const auto* a : {"a", "b", "c"}) {
    for (double v : {1.0, 2.5, 3.0, 4.5, 2.0, 3.5}) {
      y.push_back(v);
      arms.push_back(a);
    }
  }
  Dataset data(y, arms);
  ModelSpec spec;
  spec.reference_arm = "a";
  auto design = build_design(data, spec);
  auto model = fit_bayes(design, isotropic_prior(design.schema.size(), 0.0, 1e4, 1.0));
  OrthantOptions options;
  options.seed = seed;
  auto ranking = prob_best(model, data, {"a", "b", "c"}, Predicate::always(), options);
  double worst = 0.0;
  for (const auto& a : ranking.arms) worst = std::max(worst, std::abs(a.prob_best - 1.0 / 3.0));
  CriterionResult r;
  r.passed = worst <= 2e-3;
  r.detail = "max |prob_best - 1/3| = " + fmt(worst) + " (tol 2e-3)";
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"delta_identity", "group_means", "saturated",
                                                 "coverage",       "ratio",       "orthant"};
  return names;
}

std::vector<CriterionResult> run_suite(std::string_view name, std::uint64_t seed) {
  std::vector<CriterionResult> out;
  const bool all = name == "all";
  bool matched = all;
  auto want = [&](std::string_view suite) {
    if (all || name == suite) {
      matched = true;
      return true;
    }
    return false;
  };
  if (want("delta_identity"))
    out.push_back(timed("delta_identity", [&] { return delta_identity(seed); }));
  if (want("group_means")) out.push_back(timed("group_means", [&] { return group_means(seed); }));
  if (want("saturated")) out.push_back(timed("saturated_cate_hte", [&] { return saturated(seed); }));
  if (want("coverage")) out.push_back(timed("ci_coverage", [&] { return coverage(seed); }));
  if (want("ratio")) {
    out.push_back(timed("ratio_hand_case", [] { return ratio_hand_case(); }));
    out.push_back(timed("ratio_monte_carlo", [&] { return ratio_battery(seed); }));
  }
  if (want("orthant")) {
    out.push_back(timed("orthant_bivariate", [] { return orthant_bivariate(); }));
    out.push_back(timed("orthant_monte_carlo", [&] { return orthant_vs_monte_carlo(seed); }));
    out.push_back(timed("prob_best_sums", [&] { return prob_best_sums(seed); }));
    out.push_back(timed("prob_best_exchangeable", [&] { return exchangeable_three_arms(seed); }));
  }
  if (!matched) throw ValidationError("unknown verify suite '" + std::string(name) + "'");
  return out;
}

}  // namespace effect_engine::verify
