#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "effect_engine/absolute_effects.hpp"
#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/ranking.hpp"

using namespace effect_engine;

namespace {

Dataset synthetic(std::size_t n, int arms) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> z;
  std::vector<double> y(n), x(n);
  std::vector<std::string> w(n), g(n);
  const char* levels[] = {"a", "b", "c", "d"};
  for (std::size_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(i % static_cast<std::size_t>(arms));
    w[i] = "arm" + std::to_string(a);
    x[i] = z(rng);
    g[i] = levels[rng() % 4];
    y[i] = 1 + 0.5 * x[i] + 0.2 * a + z(rng);
  }
  return Dataset(std::move(y), std::move(w),
                 {CovariateColumn{"x", std::move(x)}, CovariateColumn{"g", std::move(g)}});
}

DesignMatrix design_for(const Dataset& data) {
  ModelSpec spec;
  spec.reference_arm = "arm0";
  return build_design(data, spec);
}

void BM_BuildDesign(benchmark::State& state) {
  auto data = synthetic(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(design_for(data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildDesign)->Arg(1000)->Arg(100000);

void BM_FitOls(benchmark::State& state) {
  auto design = design_for(synthetic(static_cast<std::size_t>(state.range(0)), 3));
  const auto kind = static_cast<CovarianceKind>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fit_ols(design, kind));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitOls)
    ->Args({1000, static_cast<int>(CovarianceKind::classical)})
    ->Args({1000, static_cast<int>(CovarianceKind::hc1)})
    ->Args({100000, static_cast<int>(CovarianceKind::hc1)});

void BM_CateQuery(benchmark::State& state) {
  auto data = synthetic(static_cast<std::size_t>(state.range(0)), 3);
  auto model = fit_ols(design_for(data), CovarianceKind::hc1);
  auto pred = Predicate::parse("x > 0 && g == b");
  for (auto _ : state) benchmark::DoNotOptimize(cate(model, data, "arm1", "arm0", pred));
}
BENCHMARK(BM_CateQuery)->Arg(1000)->Arg(100000);

void BM_Apply(benchmark::State& state) {
  auto data = synthetic(2000, static_cast<int>(state.range(0)));
  auto model = fit_ols(design_for(data), CovarianceKind::hc1);
  auto v = delta_vector(model.schema, global_profile(data, model.schema), "arm1", "arm0");
  for (auto _ : state) benchmark::DoNotOptimize(apply(v, model));
}
BENCHMARK(BM_Apply)->Arg(2)->Arg(8);

void BM_MvnOrthant(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(m, m, 0.5);
  sigma.diagonal().setOnes();
  Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(m, -0.2, 0.3);
  OrthantOptions options;
  options.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mvn_orthant(mu, sigma, options));
}
BENCHMARK(BM_MvnOrthant)->DenseRange(2, 6, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
