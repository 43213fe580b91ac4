#include "effect_engine/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "effect_engine/error.hpp"
#include "effect_engine/parallel.hpp"

namespace effect_engine::verify {
namespace {

constexpr std::size_t kChunk = 1 << 16;

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on (0, 1].
double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

}  // namespace

void OracleConfig::validate() const {
  if (mc_draws < 10'000) throw ValidationError("oracle needs at least 1e4 Monte Carlo draws");
  if (!(sigma_multiple > 0.0)) throw ValidationError("oracle sigma multiple must be positive");
}

double reference_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (std::abs(x) < 2.5) {
    // Phi(x) = 1/2 + phi(x) * (x + x^3/3 + x^5/(3*5) + ...)
    double term = x;
    double sum = x;
    for (int k = 1; k < 200; ++k) {
      term *= x * x / (2.0 * k + 1.0);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return 0.5 + density * sum;
  }
  // Upper tail Q(t) = phi(t) / (t + 1/(t + 2/(t + 3/(t + ...)))), evaluated backwards.
  const double t = std::abs(x);
  double frac = t;
  for (int k = 300; k >= 1; --k) frac = t + k / frac;
  const double tail = density / frac;
  return x > 0 ? 1.0 - tail : tail;
}

double bivariate_orthant(double rho) {
  return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
}

double CounterNormal::operator()(std::uint64_t index) const {
  const std::uint64_t pair = index >> 1;
  const std::uint64_t key = mix(seed_ ^ mix(pair));
  const double u1 = open_unit(mix(key));
  const double u2 = open_unit(mix(key ^ 0xd1b54a32d192ed03ULL));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

Eigen::MatrixXd reference_cholesky(const Eigen::MatrixXd& a) {
  const Eigen::Index m = a.rows();
  auto attempt = [m](const Eigen::MatrixXd& s, Eigen::MatrixXd& l) {
    l = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      double d = s(j, j);
      for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0)) return false;
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < m; ++i) {
        double v = s(i, j);
        for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
        l(i, j) = v / l(j, j);
      }
    }
    return true;
  };
  Eigen::MatrixXd l;
  if (attempt(a, l)) return l;
  Eigen::MatrixXd jittered = a;
  const double trace = a.trace();
  for (Eigen::Index i = 0; i < m; ++i) jittered(i, i) += 1e-10 * trace / static_cast<double>(m);
  if (attempt(jittered, l)) return l;
  // Zero rows for an exactly null covariance: every draw equals the mean.
  if (trace == 0.0) return Eigen::MatrixXd::Zero(m, m);
  throw NumericError("oracle covariance is not positive semidefinite");
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double group_mean(const Dataset& data, std::string_view arm, const Predicate& predicate) {
  auto mask = predicate.evaluate(data);
  std::vector<double> ys;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (mask[i] && data.arms()[i] == arm) ys.push_back(data.outcome()[i]);
  }
  if (ys.empty())
    throw ValidationError("arm '" + std::string(arm) + "' has no rows in the oracle subset");
  return pairwise_sum(ys) / static_cast<double>(ys.size());
}

double group_means_effects(const Dataset& data, std::string_view arm_to, std::string_view arm_from,
                           const Predicate& predicate) {
  return group_mean(data, arm_to, predicate) - group_mean(data, arm_from, predicate);
}

McRatio mc_ratio(const FittedModel& model, const Eigen::VectorXd& d, const Eigen::VectorXd& b,
                 const OracleConfig& config) {
  config.validate();
  const Eigen::Index p = model.beta.size();
  if (d.size() != p || b.size() != p) throw ValidationError("oracle vector length mismatch");
  const Eigen::MatrixXd l = reference_cholesky(model.cov_beta);

  // beta = beta_hat + L z, so d'beta = d'beta_hat + (L'd)'z.
  const Eigen::VectorXd ld = l.transpose() * d;
  const Eigen::VectorXd lb = l.transpose() * b;
  double er = 0.0, es = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    er += d(j) * model.beta(j);
    es += b(j) * model.beta(j);
  }
  const double var_s = lb.squaredNorm();
  if (!(std::abs(es) > config.guard_multiplier * std::sqrt(var_s)))
    throw ValidationError("oracle refuses ratio: |E(S)| <= " +
                          std::to_string(config.guard_multiplier) + " sd(S)");

  const double center = er / es;
  if (var_s == 0.0 && ld.squaredNorm() == 0.0) return {center, 0.0, 0.0};

  const std::size_t draws = config.mc_draws;
  const std::size_t chunks = (draws + kChunk - 1) / kChunk;
  std::vector<Moments> partial(chunks);
  const CounterNormal normal(config.seed);
  parallel_for(chunks, default_workers(), [&](std::size_t c) {
    Moments m;
    const std::size_t end = std::min(draws, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      double r = er, s = es;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double z = normal(static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(p) +
                                static_cast<std::uint64_t>(j));
        r += ld(j) * z;
        s += lb(j) * z;
      }
      const double dev = r / s - center;
      m.sum += dev;
      m.sum_sq += dev * dev;
    }
    partial[c] = m;
  });

  Moments total;
  for (const auto& m : partial) {
    total.sum += m.sum;
    total.sum_sq += m.sum_sq;
  }
  const double n = static_cast<double>(draws);
  const double mean_dev = total.sum / n;
  McRatio out;
  out.mean = center + mean_dev;
  out.variance = std::max(0.0, (total.sum_sq - n * mean_dev * mean_dev) / (n - 1.0));
  out.mc_se = std::sqrt(out.variance / n);
  return out;
}

McOrthant mc_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                     const OracleConfig& config) {
  config.validate();
  const Eigen::Index m = mu.size();
  if (m == 0 || sigma.rows() != m || sigma.cols() != m)
    throw ValidationError("oracle orthant shape mismatch");
  const Eigen::MatrixXd l = reference_cholesky(sigma);

  const std::size_t draws = config.mc_draws;
  const std::size_t chunks = (draws + kChunk - 1) / kChunk;
  std::vector<std::size_t> hits(chunks, 0);
  const CounterNormal normal(config.seed);
  parallel_for(chunks, default_workers(), [&](std::size_t c) {
    std::vector<double> z(static_cast<std::size_t>(m));
    std::size_t count = 0;
    const std::size_t end = std::min(draws, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      for (Eigen::Index j = 0; j < m; ++j)
        z[static_cast<std::size_t>(j)] = normal(static_cast<std::uint64_t>(i) *
                                                    static_cast<std::uint64_t>(m) +
                                                static_cast<std::uint64_t>(j));
      bool inside = true;
      for (Eigen::Index r = 0; r < m && inside; ++r) {
        double v = mu(r);
        for (Eigen::Index k = 0; k <= r; ++k) v += l(r, k) * z[static_cast<std::size_t>(k)];
        inside = v > 0.0;
      }
      if (inside) ++count;
    }
    hits[c] = count;
  });

  std::size_t total = 0;
  for (auto h : hits) total += h;
  const double n = static_cast<double>(draws);
  McOrthant out;
  out.prob = static_cast<double>(total) / n;
  out.mc_se = std::sqrt(out.prob * (1.0 - out.prob) / n);
  return out;
}

}  // namespace effect_engine::verify
